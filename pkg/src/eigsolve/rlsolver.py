"""Reward-driven single-shot eigensolver loop and its staged multi-qubit protocol.

Each iteration prepares ``D_k|j>``, evolves it under the observable, undoes
``D_k`` and reads out one computational-basis outcome ``m``. Hitting the target
(``m == j``) shrinks the random-angle range ``w`` by ``r``; any other allowed
outcome rotates ``D`` in the ``{j, m}`` plane and widens ``w`` by ``p``.
Outcomes in already-solved levels are counted as errors and change nothing.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Mapping, Sequence

import numpy as np

from .agent import (
    AgentUnitary,
    EulerParams,
    RotationAngles,
    accumulate_euler,
    euler_unitary,
    update_agent,
)
from .environment import (
    Observable,
    ShotSource,
    measurement_flip_noise,
    outcome_distribution,
    single_shot,
)
from .errors import DimensionMismatch, MaxIterationsExceeded

DEFAULT_W_THRESHOLD = 0.1
DEFAULT_MAX_ITERATIONS = 50_000


@dataclass(frozen=True)
class RewardState:
    w: float
    r: float
    p: float

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"range amplitude w must lie in [0, 1], got {self.w}")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"reward ratio r must lie in (0, 1), got {self.r}")
        if not self.p > 1.0:
            raise ValueError(f"punishment ratio p must exceed 1, got {self.p}")


def reward_update(rs: RewardState, outcome_m: int, target_j: int) -> RewardState:
    if outcome_m == target_j:
        w = rs.w * rs.r
    else:
        # w scales a full-turn angle range; growing it past 1 adds nothing.
        w = min(rs.w * rs.p, 1.0)
    return RewardState(w, rs.r, rs.p)


def draw_angles(rs: RewardState, src: ShotSource) -> RotationAngles:
    """Three uniform angles from [-w*pi, w*pi], consuming exactly three draws."""
    u = src.uniforms(3)
    half = rs.w * math.pi
    theta, phi, lam = (half * (2.0 * u - 1.0)).tolist()
    return RotationAngles(theta, phi, lam)


@dataclass(frozen=True)
class StageConfig:
    target_j: int
    allowed_outcomes: frozenset[int]
    w_threshold: float = DEFAULT_W_THRESHOLD
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        object.__setattr__(self, "allowed_outcomes", frozenset(self.allowed_outcomes))
        if self.target_j not in self.allowed_outcomes:
            raise ValueError("target_j must be one of the allowed outcomes")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass
class StageResult:
    """What one stage consumed and where it stopped."""

    target_j: int
    updates: int = 0
    errors: Counter = field(default_factory=Counter)
    terminal_w: float = 1.0
    converged: bool = False
    euler: EulerParams | None = None
    history: list[int] | None = None

    @property
    def shots(self) -> int:
        return self.updates + sum(self.errors.values())


StepCallback = Callable[[int, int, bool, AgentUnitary, RewardState], None]


def run_stage(
    o: Observable,
    d0: AgentUnitary,
    cfg: StageConfig,
    rs0: RewardState,
    src: ShotSource,
    *,
    noise_eps: float = 0.0,
    euler: EulerParams | None = None,
    inject: Mapping[int, int] | None = None,
    record_history: bool = False,
    callback: StepCallback | None = None,
) -> tuple[AgentUnitary, StageResult]:
    """Iterate the measure/act loop until ``w`` drops below the threshold.

    With ``euler`` given (single qubit only), the agent is parametrised by
    Euler angles that are incremented on outcome 1 instead of composed with
    two-level rotations.

    ``inject`` maps a shot index within the stage to a forced outcome; a forced
    shot consumes no randomness, so it can be spliced into a trajectory
    without disturbing the rest. It exists for testing the masking rule.
    """
    if d0.dim != o.dim:
        raise DimensionMismatch(f"agent dimension {d0.dim} != observable dimension {o.dim}")
    if euler is not None and o.dim != 2:
        raise DimensionMismatch("Euler parametrisation is single-qubit only")
    j = cfg.target_j
    allowed = cfg.allowed_outcomes
    d, rs = d0, rs0
    result = StageResult(j, euler=euler, history=[] if record_history else None)
    shot = 0
    while rs.w >= cfg.w_threshold:
        if shot >= cfg.max_iterations:
            break
        forced = inject.get(shot) if inject else None
        if forced is None:
            dist = outcome_distribution(o, d, j)
            if noise_eps:
                dist = measurement_flip_noise(dist, noise_eps)
            m = single_shot(dist, src)
        else:
            m = forced
        masked = m not in allowed
        if result.history is not None:
            result.history.append(m)
        if masked:
            result.errors[m] += 1
        else:
            angles = draw_angles(rs, src) if m != j else RotationAngles(0.0, 0.0, 0.0)
            if euler is not None:
                euler = accumulate_euler(euler, angles, m)
                d = AgentUnitary(euler_unitary(euler), d.iteration + 1)
            else:
                d = update_agent(d, m, j, angles)
            rs = reward_update(rs, m, j)
            result.updates += 1
        if callback is not None:
            callback(shot, m, masked, d, rs)
        shot += 1
    result.terminal_w = rs.w
    result.converged = rs.w < cfg.w_threshold
    result.euler = euler
    return d, result


@dataclass(frozen=True)
class Round:
    r: float
    p: float
    w_reset: float = 1.0

    def __post_init__(self):
        RewardState(self.w_reset, self.r, self.p)


@dataclass(frozen=True)
class RestartSchedule:
    rounds: tuple[Round, ...]

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise ValueError("a schedule needs at least one round")

    @classmethod
    def single(cls, r: float, p: float, w_reset: float = 1.0) -> RestartSchedule:
        return cls((Round(r, p, w_reset),))

    @classmethod
    def from_ratios(cls, rs: Sequence[float], p_factor: float = 1.0) -> RestartSchedule:
        """One round per reward ratio, each with punishment ``p_factor / r``."""
        return cls(tuple(Round(r, p_factor / r) for r in rs))


@dataclass(frozen=True)
class ProtocolOptions:
    w_threshold: float = DEFAULT_W_THRESHOLD
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    noise_eps: float = 0.0
    single_qubit_form: str = "euler"  # or "rotation"
    record_history: bool = False
    strict: bool = False

    def __post_init__(self):
        if self.single_qubit_form not in ("euler", "rotation"):
            raise ValueError(f"unknown single-qubit form {self.single_qubit_form!r}")


@dataclass
class RunRecord:
    """Full trace of one protocol run.

    ``stage_updates[round][stage]`` counts non-masked iterations; masked shots
    live in ``errors`` keyed by ``(stage, outcome)``. ``total_iterations`` is
    every shot taken, masked ones included.
    """

    seed: int
    label: str
    dim: int
    stage_updates: list[list[int]]
    stage_errors: list[list[dict[int, int]]]
    terminal_w: list[list[float]]
    converged: bool
    agent: AgentUnitary
    euler: EulerParams | None = None
    history: list[list[list[int]]] | None = None

    @property
    def errors(self) -> Counter:
        out: Counter = Counter()
        for rnd in self.stage_errors:
            for s, errs in enumerate(rnd):
                for m, c in errs.items():
                    out[(s, m)] += c
        return out

    @property
    def stage_iterations(self) -> list[int]:
        """Non-masked iterations per stage, summed over rounds (n_1, n_2, ...)."""
        return [sum(col) for col in zip(*self.stage_updates)]

    @property
    def round_iterations(self) -> list[int]:
        """Shots per round, masked included."""
        return [
            sum(u) + sum(sum(e.values()) for e in errs)
            for u, errs in zip(self.stage_updates, self.stage_errors)
        ]

    @property
    def total_iterations(self) -> int:
        return sum(self.stage_iterations) + sum(self.errors.values())


def _stage_count(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise DimensionMismatch(f"protocol needs a 2^n dimensional observable, got {dim}")
    return dim - 1


def run_protocol(
    o: Observable,
    schedule: RestartSchedule,
    seed: int,
    options: ProtocolOptions = ProtocolOptions(),
    *,
    callback: Callable[[int, int, int, bool, AgentUnitary, RewardState], None] | None = None,
) -> RunRecord:
    """Run every round of the schedule, each sweeping stages 0 .. dim-2.

    Stage ``s`` targets ``|s>`` and accepts outcomes ``s .. dim-1``; the last
    column of D is fixed by unitarity. D carries over between stages and
    rounds, while ``w`` restarts at the round's ``w_reset``.
    """
    n_stages = _stage_count(o.dim)
    src = ShotSource(seed)
    d = AgentUnitary.identity(o.dim)
    euler = EulerParams(0.0, 0.0, 0.0) if o.dim == 2 and options.single_qubit_form == "euler" else None
    updates, errors, terminal, history = [], [], [], []
    converged = True
    for rnd in schedule.rounds:
        u_row, e_row, w_row, h_row = [], [], [], []
        for s in range(n_stages):
            cfg = StageConfig(s, frozenset(range(s, o.dim)), options.w_threshold, options.max_iterations)
            cb = None
            if callback is not None:
                cb = partial(callback, s)
            d, res = run_stage(
                o,
                d,
                cfg,
                RewardState(rnd.w_reset, rnd.r, rnd.p),
                src,
                noise_eps=options.noise_eps,
                euler=euler,
                record_history=options.record_history,
                callback=cb,
            )
            euler = res.euler
            if not res.converged:
                converged = False
                if options.strict:
                    raise MaxIterationsExceeded(
                        f"stage {s} hit {options.max_iterations} iterations (seed {seed})"
                    )
            u_row.append(res.updates)
            e_row.append(dict(sorted(res.errors.items())))
            w_row.append(res.terminal_w)
            h_row.append(res.history)
        updates.append(u_row)
        errors.append(e_row)
        terminal.append(w_row)
        history.append(h_row)
    return RunRecord(
        seed=seed,
        label=o.label,
        dim=o.dim,
        stage_updates=updates,
        stage_errors=errors,
        terminal_w=terminal,
        converged=converged,
        agent=d,
        euler=euler,
        history=history if options.record_history else None,
    )


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("EIGSOLVE_THREADS", "1")))
    except ValueError:
        return 1


def run_batch(
    o: Observable,
    schedule: RestartSchedule,
    n_runs: int,
    base_seed: int,
    options: ProtocolOptions = ProtocolOptions(),
    threads: int | None = None,
) -> list[RunRecord]:
    """Run ``n_runs`` independent protocols; run ``i`` uses seed ``base_seed + i``."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    seeds = [base_seed + i for i in range(n_runs)]
    threads = threads or default_threads()
    # Warm the cached evolution operator before any worker touches it.
    o.evolution
    if threads == 1:
        return [run_protocol(o, schedule, s, options) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: run_protocol(o, schedule, s, options), seeds))


def columns_match(a: np.ndarray, b: np.ndarray, cols: Sequence[int], tol: float = 1e-12) -> bool:
    """True if columns ``cols`` of ``a`` and ``b`` agree up to one global phase."""
    if not cols:
        return True
    x, y = a[:, list(cols)], b[:, list(cols)]
    overlap = np.vdot(x.ravel(), y.ravel())
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(x * phase - y))) <= tol
