"""Constructive spatial-isolation scheme for the corner points of the region.

T2 splits its streams into an "orth" part (directions that never reach the
base-station receiver) and an "int" part whose self-interference is steered
where R1 can discard it. R1 and R2 project onto receive functionals that
turn each link into a square effective matrix.

Two regimes exist for the uplink-first corner. When the uplink is limited by
the receiver (L_T1|Psi_T11| >= L_R1|Psi_R11|) the textbook singular-vector
and preimage construction applies. When the uplink user's array is the
bottleneck, R1 has spare dimensions, so T2 only avoids the part of its
interference range that overlaps the uplink signal space and R1 nulls the rest.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .channel import ChannelOperators, GridSpec, block_counts, build_channel, support_subspace
from .intervals import IntervalSet
from .linalg import (
    Subspace, intersect, orth_complement, preimage, random_orthonormal,
    range_space, singular_system,
)
from .regions import NetworkGeometry, corner_points

log = logging.getLogger(__name__)

LEAKAGE_CLAMP_DB = -400.0
DEFAULT_LEAKAGE_FLOOR_DB = -30.0


class InfeasibleTargetError(ValueError):
    pass


@dataclass
class TransmitPlan:
    node: str
    basis: np.ndarray
    n_symbols: int
    split: tuple[int, int] | None = None
    case_tag: str = "not_applicable"


@dataclass
class ReceivePlan:
    node: str
    functionals: np.ndarray
    case_tag: str = "not_applicable"

    @property
    def count(self) -> int:
        return self.functionals.shape[1]


@dataclass
class SchemePlans:
    t1: TransmitPlan
    t2: TransmitPlan
    r1: ReceivePlan
    r2: ReceivePlan


@dataclass
class EffectiveChannels:
    M1: np.ndarray
    M2: np.ndarray
    interference_leakage_db: float
    noise_cov_rank: int
    interference: np.ndarray          # R1 functionals applied to H12 times the T2 basis
    stream_leakage_db: np.ndarray     # per uplink stream
    s_hat1: np.ndarray
    s_hat2: np.ndarray


@dataclass
class AchievedDof:
    d1: int
    d2: int
    meets_corner: bool
    leakage_db: float = LEAKAGE_CLAMP_DB
    target: tuple[float, float] | None = None
    record: dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# named subspaces and their dimensions

def _split_node(ch: ChannelOperators, node: str, own: IntervalSet,
                cross: IntervalSet) -> tuple[Subspace, Subspace, Subspace]:
    """Split a base-station space into (own only, overlap, cross only).

    The two "only" parts are members that vanish off their interval. The
    overlap part is whatever remains, so the three always add up to the whole
    space. In block mode this is the exact coordinate split; in physical mode
    the overlap part also absorbs the plunge directions that are clean of
    neither interval.
    """
    space = ch.space(node)
    points = ch.points[node]
    own_only = support_subspace(space, own - cross, points, ch.support_tol)
    rest = orth_complement(own_only, within=space)
    cross_only = support_subspace(rest, cross - own, points, ch.support_tol)
    overlap = orth_complement(cross_only, within=rest)
    return own_only, overlap, cross_only


def _join(a: Subspace, b: Subspace) -> Subspace:
    return Subspace(a.ambient_dim, np.hstack([a.basis, b.basis]))


def named_subspaces(ch: ChannelOperators) -> dict[str, Subspace]:
    g = ch.geometry
    t22_only, t_both, t12_only = _split_node(ch, "T2", g.psi_T22, g.psi_T12)
    r11_only, r_both, r12_only = _split_node(ch, "R1", g.psi_R11, g.psi_R12)
    return {
        "T1": ch.tx_space_1,
        "T2": ch.tx_space_2,
        "T22": _join(t22_only, t_both),
        "T12": _join(t_both, t12_only),
        "T22_only": t22_only,
        "T_both": t_both,
        "T12_only": t12_only,
        "R1": ch.rx_space_1,
        "R11": _join(r11_only, r_both),
        "R12": _join(r_both, r12_only),
        "R11_only": r11_only,
        "R12_only": r12_only,
        "R_both": r_both,
        "R2": ch.rx_space_2,
    }


@dataclass(frozen=True)
class CornerBudget:
    """Stream counts for the uplink-first corner, from subspace dimensions."""

    d1: int
    d2: int
    d2_orth: int
    d2_int: int
    receiver_limited: bool
    case_tag: str


def corner_budget(dims: dict[str, int]) -> CornerBudget:
    t1, r11 = dims["T1"], dims["R11"]
    t12, r12 = dims["T12"], dims["R12"]
    receiver_limited = t1 >= r11
    d1 = min(t1, r11)
    r22 = min(dims["T22"], dims["R2"])
    d2_orth = min(dims["T22_only"], dims["R2"])
    spare_r2 = max(r22 - d2_orth, 0)
    if receiver_limited:
        room = max(t12 - r12, 0) + dims["R12_only"]
    else:
        room = t12 - (t1 - (dims["R11_only"] + max(r12 - t12, 0)))
    d2_int = max(0, min(dims["T_both"], room, spare_r2))
    if t12 == 0 or r12 == 0:
        tag = "not_applicable"
    else:
        tag = "t12_le_r12" if t12 <= r12 else "t12_gt_r12"
    return CornerBudget(d1, d2_orth + d2_int, d2_orth, d2_int, receiver_limited, tag)


# ---------------------------------------------------------------------------
# plans

def build_t1_plan(ch: ChannelOperators, d1_target: int) -> TransmitPlan:
    h11 = ch.compress("H11")
    sv = singular_system(h11)
    if d1_target > sv.rank:
        raise InfeasibleTargetError(f"uplink target {d1_target} exceeds rank {sv.rank} of H11")
    basis = ch.tx_space_1.basis @ sv.right[:, :d1_target]
    return TransmitPlan("T1", basis, d1_target)


def _self_interference(ch: ChannelOperators, spaces: dict[str, Subspace]) -> np.ndarray:
    return ch.compress("H12", spaces["R12"], spaces["T12"])


def build_t2_plan(ch: ChannelOperators, geom: NetworkGeometry, d2_target: int,
                  rng: np.random.Generator | None = None,
                  t1_plan: TransmitPlan | None = None,
                  spaces: dict[str, Subspace] | None = None) -> TransmitPlan:
    if ch.mode == "blockmodel":
        block_counts(geom)  # raises on non-integer dimensions
    rng = rng or np.random.default_rng(0)
    spaces = spaces or named_subspaces(ch)
    budget = corner_budget({k: s.dim for k, s in spaces.items()})
    if d2_target > budget.d2:
        raise InfeasibleTargetError(f"downlink target {d2_target} exceeds the corner value {budget.d2}")

    d2_orth = min(budget.d2_orth, d2_target)
    d2_int = d2_target - d2_orth
    orth = random_orthonormal(spaces["T22_only"], d2_orth, rng)

    t12 = spaces["T12"]
    if d2_int == 0:
        inner = np.zeros((t12.ambient_dim, 0), dtype=complex)
    elif budget.receiver_limited:
        h12 = _self_interference(ch, spaces)
        if t12.dim <= spaces["R12"].dim:
            inner = t12.basis @ singular_system(h12).right[:, :d2_int]
        else:
            r12_only = Subspace(h12.shape[0], spaces["R12"].basis.conj().T @ spaces["R12_only"].basis)
            pre = preimage(h12, r12_only)
            inner = random_orthonormal(Subspace(t12.ambient_dim, t12.basis @ pre.basis), d2_int, rng)
    else:
        if t1_plan is None:
            raise ValueError("the transmitter-limited construction needs the uplink plan")
        pre = _avoiding_preimage(ch, spaces, t1_plan)
        inner = random_orthonormal(pre, d2_int, rng)

    basis = np.hstack([inner, orth])
    if ch.mode != "blockmodel" and basis.shape[1]:
        # keep the int span exact; orthogonalize the orth part against it
        basis, _ = np.linalg.qr(basis)
    basis = np.hstack([basis[:, d2_int:], basis[:, :d2_int]])
    return TransmitPlan("T2", basis, d2_target, (d2_orth, d2_int), budget.case_tag)


def _uplink_signal_space(ch: ChannelOperators, t1_plan: TransmitPlan) -> Subspace:
    return range_space(ch.rx_space_1.project(ch.H11 @ t1_plan.basis))


def _avoiding_preimage(ch: ChannelOperators, spaces: dict[str, Subspace],
                       t1_plan: TransmitPlan) -> Subspace:
    """T12 inputs whose interference avoids the overlap with the uplink signal space."""
    r12, t12 = spaces["R12"], spaces["T12"]
    h12 = _self_interference(ch, spaces)
    reach = Subspace(r12.ambient_dim, r12.basis @ range_space(h12).basis)
    overlap = intersect(reach, _uplink_signal_space(ch, t1_plan))
    allowed = orth_complement(overlap, within=reach)
    allowed_coords = Subspace(r12.dim, r12.basis.conj().T @ allowed.basis)
    pre = preimage(h12, allowed_coords)
    return Subspace(t12.ambient_dim, t12.basis @ pre.basis)


def build_r1_plan(ch: ChannelOperators, geom: NetworkGeometry, t1_plan: TransmitPlan,
                  t2_plan: TransmitPlan, rng: np.random.Generator | None = None,
                  spaces: dict[str, Subspace] | None = None) -> ReceivePlan:
    rng = rng or np.random.default_rng(0)
    spaces = spaces or named_subspaces(ch)
    budget = corner_budget({k: s.dim for k, s in spaces.items()})
    d1 = t1_plan.n_symbols
    tag = t2_plan.case_tag
    _, d2_int = t2_plan.split or (t2_plan.n_symbols, 0)

    if tag == "not_applicable" or (budget.receiver_limited and tag == "t12_gt_r12"):
        sv = singular_system(ch.compress("H11"))
        return ReceivePlan("R1", ch.rx_space_1.basis @ sv.left[:, :d1], tag)

    if budget.receiver_limited:
        a = min(spaces["R11_only"].dim, d1)
        head = random_orthonormal(spaces["R11_only"], a, rng)
        c = d1 - a
        u12 = _left_singular_completed(_self_interference(ch, spaces), rng)
        tail = spaces["R12"].basis @ u12[:, u12.shape[1] - c:] if c else head[:, :0]
        return ReceivePlan("R1", np.hstack([head, tail]), tag)

    signal = _uplink_signal_space(ch, t1_plan)
    inner = t2_plan.basis[:, t2_plan.basis.shape[1] - d2_int:]
    interference = range_space(ch.rx_space_1.project(ch.H12 @ inner))
    clean = range_space(signal.basis - interference.project(signal.basis))
    return ReceivePlan("R1", clean.basis[:, :d1], tag)


def _left_singular_completed(h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Left singular vectors, with the left-null part replaced by a seeded random basis.

    Vectors past the rank are not unique, and the LAPACK completion tends to be
    coordinate aligned, which can miss the overlap region entirely.
    """
    sv = singular_system(h)
    head = sv.left[:, : sv.rank]
    rest = orth_complement(Subspace(h.shape[0], head))
    return np.hstack([head, random_orthonormal(rest, rest.dim, rng)])


def build_r2_plan(ch: ChannelOperators, d2_target: int) -> ReceivePlan:
    sv = singular_system(ch.compress("H22"))
    if d2_target > sv.rank:
        raise InfeasibleTargetError(f"downlink target {d2_target} exceeds rank {sv.rank} of H22")
    return ReceivePlan("R2", ch.rx_space_2.basis @ sv.left[:, :d2_target])


def design_uplink_first(ch: ChannelOperators, seed: int = 0) -> tuple[SchemePlans, CornerBudget, dict[str, int]]:
    rng = np.random.default_rng([seed, 7])
    spaces = named_subspaces(ch)
    dims = {k: s.dim for k, s in spaces.items()}
    budget = corner_budget(dims)
    t1 = build_t1_plan(ch, budget.d1)
    t2 = build_t2_plan(ch, ch.geometry, budget.d2, rng, t1_plan=t1, spaces=spaces)
    r1 = build_r1_plan(ch, ch.geometry, t1, t2, rng, spaces=spaces)
    r2 = build_r2_plan(ch, budget.d2)
    return SchemePlans(t1, t2, r1, r2), budget, dims


def _swap_roles(plans: SchemePlans) -> SchemePlans:
    """Reinterpret plans designed on the dual network for the original one."""
    return SchemePlans(
        t1=TransmitPlan("T1", plans.r2.functionals, plans.r2.count),
        t2=TransmitPlan("T2", plans.r1.functionals, plans.r1.count, case_tag=plans.r1.case_tag),
        r1=ReceivePlan("R1", plans.t2.basis, plans.t2.case_tag),
        r2=ReceivePlan("R2", plans.t1.basis),
    )


# ---------------------------------------------------------------------------
# transmission and measurement

def _to_db(num: float, den: float) -> float:
    if num == 0.0:
        return LEAKAGE_CLAMP_DB
    if den == 0.0:
        return -LEAKAGE_CLAMP_DB
    return max(LEAKAGE_CLAMP_DB, 10 * math.log10(num / den))


def _complex_gaussian(rng, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def run_transmission(ch: ChannelOperators, plans: SchemePlans, symbols=None,
                     noise_scale: float = 0.0, seed: int = 0) -> EffectiveChannels:
    rng = np.random.default_rng([seed, 11])
    n1, n2 = plans.t1.basis.shape[1], plans.t2.basis.shape[1]
    if symbols is None:
        symbols = (_complex_gaussian(rng, n1), _complex_gaussian(rng, n2))
    s1, s2 = (np.asarray(s, dtype=complex) for s in symbols)
    if s1.shape != (n1,) or s2.shape != (n2,):
        raise ValueError(f"symbol counts {s1.shape}, {s2.shape} do not match plans ({n1}, {n2})")

    x1 = plans.t1.basis @ s1
    x2 = plans.t2.basis @ s2
    y1 = ch.H11 @ x1 + ch.H12 @ x2
    y2 = ch.H22 @ x2
    if noise_scale > 0:
        y1 = y1 + noise_scale * ch.rx_space_1.basis @ _complex_gaussian(rng, ch.rx_space_1.dim)
        y2 = y2 + noise_scale * ch.rx_space_2.basis @ _complex_gaussian(rng, ch.rx_space_2.dim)

    f1, f2 = plans.r1.functionals, plans.r2.functionals
    m1 = f1.conj().T @ ch.H11 @ plans.t1.basis
    m2 = f2.conj().T @ ch.H22 @ plans.t2.basis
    k1 = f1.conj().T @ ch.H12 @ plans.t2.basis

    wanted = float(np.sum(np.abs(m1 @ s1) ** 2))
    leak = float(np.sum(np.abs(k1 @ s2) ** 2))
    per_stream = np.array([
        _to_db(float(np.sum(np.abs(k1[i]) ** 2)), float(np.sum(np.abs(m1[i]) ** 2)))
        for i in range(m1.shape[0])
    ])
    # processed noise is F^H Z with Z white in the receive space
    cov1 = f1.conj().T @ ch.rx_space_1.projector() @ f1
    cov2 = f2.conj().T @ ch.rx_space_2.projector() @ f2
    noise_rank = singular_system(cov1).rank + singular_system(cov2).rank

    return EffectiveChannels(
        M1=m1, M2=m2,
        interference_leakage_db=_to_db(leak, wanted),
        noise_cov_rank=noise_rank,
        interference=k1,
        stream_leakage_db=per_stream,
        s_hat1=f1.conj().T @ y1,
        s_hat2=f2.conj().T @ y2,
    )


def measure_dof(eff: EffectiveChannels, leakage_floor_db: float,
                target: tuple[float, float] | None = None) -> AchievedDof:
    keep = eff.stream_leakage_db <= leakage_floor_db
    d1 = singular_system(eff.M1[keep]).rank if keep.any() else 0
    d2 = singular_system(eff.M2).rank
    meets = target is not None and abs(d1 - target[0]) <= 1e-9 and abs(d2 - target[1]) <= 1e-9
    return AchievedDof(d1, d2, meets, eff.interference_leakage_db, target)


def conditioning(m: np.ndarray) -> float:
    """Smallest over largest singular value (1 for an empty matrix)."""
    if m.size == 0:
        return 1.0
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def achieve_corner(geom: NetworkGeometry, which: str = "prime", mode: str = "blockmodel",
                   seed: int = 0, grid: GridSpec | None = None,
                   leakage_floor_db: float = DEFAULT_LEAKAGE_FLOOR_DB,
                   return_details: bool = False):
    """Build the channel, design plans for one corner, transmit and measure.

    The downlink-first corner reuses the uplink-first design on the dual
    (reciprocal) network and swaps transmit bases with receive functionals.
    """
    if which not in ("prime", "double_prime"):
        raise ValueError(f"corner must be 'prime' or 'double_prime', got {which!r}")
    ch = build_channel(geom, mode, seed, grid)
    corners = corner_points(geom)
    if which == "prime":
        plans, budget, dims = design_uplink_first(ch, seed)
        target = corners.p_prime
    else:
        dual_plans, budget, dims = design_uplink_first(ch.dual(), seed)
        plans = _swap_roles(dual_plans)
        target = corners.p_double_prime

    eff = run_transmission(ch, plans, seed=seed)
    result = measure_dof(eff, leakage_floor_db, target)
    if mode == "blockmodel" and not result.meets_corner:
        log.warning("corner %s not reached for geometry %s: got (%d, %d), expected %s",
                    which, geom, result.d1, result.d2, target)
    result.record = {
        "geometry": geom.to_dict(),
        "mode": mode,
        "corner": which,
        "seed": seed,
        "case_tag": plans.t2.case_tag if which == "prime" else plans.r1.case_tag,
        "receiver_limited": budget.receiver_limited,
        "split": [budget.d2_orth, budget.d2_int],
        "dims": dims,
        "target": list(target),
        "achieved": [result.d1, result.d2],
        "leakage_db": result.leakage_db,
        "meets_corner": result.meets_corner,
    }
    if return_details:
        return result, ch, plans, eff
    return result
