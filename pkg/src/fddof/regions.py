"""Closed-form degrees-of-freedom regions of the full-duplex Z-channel.

Node naming: T1 is the uplink user, R1 the base-station receiver, T2 the
base-station transmitter and R2 the downlink user. The only cross link is
the self-interference path T2 -> R1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any

from .intervals import IntervalSet

TOL = 1e-9

L_FIELDS = ("L_T1", "L_R1", "L_T2", "L_R2")
PSI_FIELDS = ("psi_T11", "psi_R11", "psi_T22", "psi_R22", "psi_T12", "psi_R12")

# role exchange that turns the downlink-first corner into the uplink-first one
_MIRROR = {
    "L_T1": "L_R2", "L_R2": "L_T1", "L_R1": "L_T2", "L_T2": "L_R1",
    "psi_T11": "psi_R22", "psi_R22": "psi_T11",
    "psi_R11": "psi_T22", "psi_T22": "psi_R11",
    "psi_T12": "psi_R12", "psi_R12": "psi_T12",
}


@dataclass(frozen=True)
class NetworkGeometry:
    L_T1: float = 0.0
    L_R1: float = 0.0
    L_T2: float = 0.0
    L_R2: float = 0.0
    psi_T11: IntervalSet = field(default_factory=IntervalSet)
    psi_R11: IntervalSet = field(default_factory=IntervalSet)
    psi_T22: IntervalSet = field(default_factory=IntervalSet)
    psi_R22: IntervalSet = field(default_factory=IntervalSet)
    psi_T12: IntervalSet = field(default_factory=IntervalSet)
    psi_R12: IntervalSet = field(default_factory=IntervalSet)

    def __post_init__(self):
        for name in L_FIELDS:
            value = float(getattr(self, name))
            if not value >= 0.0 or value == float("inf"):
                raise ValueError(f"{name} must be a finite nonnegative number, got {value}")
            object.__setattr__(self, name, value)
        for name in PSI_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, IntervalSet):
                object.__setattr__(self, name, IntervalSet(value))

    def scaled(self, factor: float) -> "NetworkGeometry":
        """Same scattering, every array half-length multiplied by `factor`."""
        return replace(self, **{name: getattr(self, name) * factor for name in L_FIELDS})

    def mirrored(self) -> "NetworkGeometry":
        """Exchange uplink and downlink roles (T1<->R2, R1<->T2)."""
        return NetworkGeometry(**{_MIRROR[f.name]: getattr(self, f.name) for f in fields(self)})

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {name: getattr(self, name) for name in L_FIELDS}
        out.update({name: getattr(self, name).to_pairs() for name in PSI_FIELDS})
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NetworkGeometry":
        unknown = set(data) - set(L_FIELDS) - set(PSI_FIELDS)
        if unknown:
            raise ValueError(f"unknown geometry keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {name: float(data.get(name, 0.0)) for name in L_FIELDS}
        kwargs.update({name: IntervalSet(data.get(name, [])) for name in PSI_FIELDS})
        return cls(**kwargs)


@dataclass(frozen=True)
class _Measures:
    """All L|Psi| products the region formulas need (half of a dimension)."""

    t11: float
    r11: float
    t22: float
    r22: float
    t12: float
    r12: float
    t22_only: float   # L_T2 |T22 \ T12|
    t_both: float     # L_T2 |T22 ∩ T12|
    t12_only: float   # L_T2 |T12 \ T22|
    r11_only: float   # L_R1 |R11 \ R12|
    r_both: float     # L_R1 |R11 ∩ R12|
    r12_only: float   # L_R1 |R12 \ R11|


def _measures(g: NetworkGeometry) -> _Measures:
    t22, t12 = g.psi_T22, g.psi_T12
    r11, r12 = g.psi_R11, g.psi_R12
    return _Measures(
        t11=g.L_T1 * g.psi_T11.measure,
        r11=g.L_R1 * r11.measure,
        t22=g.L_T2 * t22.measure,
        r22=g.L_R2 * g.psi_R22.measure,
        t12=g.L_T2 * t12.measure,
        r12=g.L_R1 * r12.measure,
        t22_only=g.L_T2 * (t22 - t12).measure,
        t_both=g.L_T2 * (t22 & t12).measure,
        t12_only=g.L_T2 * (t12 - t22).measure,
        r11_only=g.L_R1 * (r11 - r12).measure,
        r_both=g.L_R1 * (r11 & r12).measure,
        r12_only=g.L_R1 * (r12 - r11).measure,
    )


@dataclass(frozen=True)
class DofRegion:
    d1_max: float
    d2_max: float
    d_sum_max: float
    vertices: tuple[tuple[float, float], ...]

    @property
    def max_sum(self) -> float:
        """Largest d1 + d2 actually attainable inside the region."""
        return max(a + b for a, b in self.vertices)

    @property
    def sum_bound_active(self) -> bool:
        return self.d_sum_max < self.d1_max + self.d2_max - TOL

    @property
    def shape(self) -> str:
        n = len(self.vertices)
        if n <= 1 or self.d1_max <= TOL or self.d2_max <= TOL:
            return "degenerate"
        if n == 2:
            return "triangle"
        if n == 3:
            return "quadrilateral" if self.sum_bound_active else "rectangle"
        return "pentagon"

    def contains(self, d, tol: float = TOL) -> bool:
        return region_contains(self, d, tol)

    def to_dict(self) -> dict[str, Any]:
        return {
            "d1_max": self.d1_max,
            "d2_max": self.d2_max,
            "d_sum_max": self.d_sum_max,
            "vertices": [list(v) for v in self.vertices],
        }


def _vertices(d1: float, d2: float, total: float) -> tuple[tuple[float, float], ...]:
    x_right = min(d1, total)
    y_top = min(d2, total)
    raw = [
        (x_right, 0.0),
        (x_right, min(d2, total - x_right)),
        (min(d1, total - y_top), y_top),
        (0.0, y_top),
    ]
    out: list[tuple[float, float]] = []
    for v in raw:
        if not out or abs(v[0] - out[-1][0]) > TOL or abs(v[1] - out[-1][1]) > TOL:
            out.append(v)
    return tuple(out)


def make_region(d1_max: float, d2_max: float, d_sum_max: float) -> DofRegion:
    return DofRegion(d1_max, d2_max, d_sum_max, _vertices(d1_max, d2_max, d_sum_max))


def fd_region(g: NetworkGeometry) -> DofRegion:
    m = _measures(g)
    d1 = 2 * min(m.t11, m.r11)
    d2 = 2 * min(m.t22, m.r22)
    total = 2 * m.t22_only + 2 * m.r11_only + 2 * max(m.t12, m.r12)
    return make_region(d1, d2, total)


@dataclass(frozen=True)
class CornerPoints:
    p_prime: tuple[float, float]
    p_double_prime: tuple[float, float]
    d_T2: float
    delta_T2: float
    d_R1: float
    delta_R1: float
    uplink_receiver_limited: bool    # L_T1|T11| >= L_R1|R11|
    downlink_receiver_limited: bool  # L_R2|R22| >= L_T2|T22|

    def to_dict(self) -> dict[str, Any]:
        return {
            "p_prime": list(self.p_prime),
            "p_double_prime": list(self.p_double_prime),
            "d_T2": self.d_T2,
            "delta_T2": self.delta_T2,
            "d_R1": self.d_R1,
            "delta_R1": self.delta_R1,
            "uplink_receiver_limited": self.uplink_receiver_limited,
            "downlink_receiver_limited": self.downlink_receiver_limited,
        }


def corner_points(g: NetworkGeometry) -> CornerPoints:
    m = _measures(g)
    pos = lambda x: max(x, 0.0)  # noqa: E731

    d_T2 = 2 * m.t22_only + 2 * min(m.t_both, pos(m.t12 - m.r12) + m.r12_only)
    delta_T2 = 2 * m.t22_only + 2 * min(
        m.t_both, m.t12 - (m.t11 - (m.r11_only + pos(m.r12 - m.t12)))
    )
    d_R1 = 2 * m.r11_only + 2 * min(m.r_both, pos(m.r12 - m.t12) + m.t12_only)
    delta_R1 = 2 * m.r11_only + 2 * min(
        m.r_both, m.r12 - (m.r22 - (m.t22_only + pos(m.t12 - m.r12)))
    )

    up_rx = m.t11 >= m.r11
    down_rx = m.r22 >= m.t22
    d1_prime = 2 * min(m.t11, m.r11)
    d2_prime = min(d_T2 if up_rx else delta_T2, 2 * m.r22)
    d2_dprime = 2 * min(m.t22, m.r22)
    d1_dprime = min(d_R1 if down_rx else delta_R1, 2 * m.t11)
    return CornerPoints(
        (d1_prime, d2_prime), (d1_dprime, d2_dprime),
        d_T2, delta_T2, d_R1, delta_R1, up_rx, down_rx,
    )


def hd_region(g: NetworkGeometry, alpha: float) -> tuple[float, float]:
    """Time-sharing point: a fraction `alpha` of time goes to the uplink."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"time-sharing fraction must lie in [0, 1], got {alpha}")
    r = fd_region(g)
    return alpha * r.d1_max, (1.0 - alpha) * r.d2_max


def region_contains(r: DofRegion, d, tol: float = TOL) -> bool:
    d1, d2 = d
    return (
        -tol <= d1 <= r.d1_max + tol
        and -tol <= d2 <= r.d2_max + tol
        and d1 + d2 <= r.d_sum_max + tol
    )


class DegenerateGenieError(ValueError):
    """Exactly one of the base-station unions is empty; ratios are undefined."""


class GenieMismatchError(AssertionError):
    pass


@dataclass(frozen=True)
class GenieExpansion:
    psi_T2_prime: IntervalSet
    psi_R1_prime: IntervalSet
    L_R1_prime: float
    L_T2_prime: float
    L_R1_double_prime: float
    dim_Tx2_prime: float
    dim_Rx1_prime: float

    @property
    def bound(self) -> float:
        return max(self.dim_Tx2_prime, self.dim_Rx1_prime)


def genie_sum_bound(g: NetworkGeometry) -> GenieExpansion:
    """Redo the sum bound as a point-to-point dimension count on enlarged nodes."""
    psi_t = g.psi_T22 | g.psi_T12
    psi_r = g.psi_R11 | g.psi_R12
    size_t, size_r = psi_t.measure, psi_r.measure
    if size_t == 0.0 and size_r == 0.0:
        return GenieExpansion(psi_t, psi_r, g.L_R1, g.L_T2, g.L_R1, 0.0, 0.0)
    if size_t == 0.0 or size_r == 0.0:
        which = "T22 ∪ T12" if size_t == 0.0 else "R11 ∪ R12"
        raise DegenerateGenieError(f"union {which} is empty; genie expansion ratios are undefined")

    L_r = g.L_R1 + g.L_T2 * (g.psi_T22 - g.psi_T12).measure / size_r
    L_t = g.L_T2 + g.L_R1 * (g.psi_R11 - g.psi_R12).measure / size_t
    expansion = GenieExpansion(
        psi_T2_prime=psi_t,
        psi_R1_prime=psi_r,
        L_R1_prime=L_r,
        L_T2_prime=L_t,
        L_R1_double_prime=L_t * size_t / size_r,
        dim_Tx2_prime=2 * L_t * size_t,
        dim_Rx1_prime=2 * L_r * size_r,
    )
    target = fd_region(g).d_sum_max
    if abs(expansion.bound - target) > TOL * max(1.0, target):
        raise GenieMismatchError(f"genie bound {expansion.bound} differs from sum bound {target}")
    return expansion


# ---------------------------------------------------------------------------
# scenario specializations

def overlapped_geometry(L_BS: float, L_Usr: float, psi_mag: float) -> NetworkGeometry:
    """Every link, including self-interference, scatters over one interval."""
    psi = IntervalSet([(-1.0, -1.0 + psi_mag)])
    return NetworkGeometry(L_Usr, L_BS, L_BS, L_Usr, psi, psi, psi, psi, psi, psi)


def symmetric_geometry(L: float, fwd_mag: float, back_mag: float, overlap_mag: float) -> NetworkGeometry:
    """Equal arrays; forward links share one interval, backscatter another."""
    _check_symmetric(fwd_mag, back_mag, overlap_mag)
    if fwd_mag + back_mag - overlap_mag > 2.0 + TOL:
        raise ValueError("forward and backscatter intervals do not fit inside [-1, 1]")
    fwd = IntervalSet([(-1.0, -1.0 + fwd_mag)])
    start = -1.0 + fwd_mag - overlap_mag
    back = IntervalSet([(start, min(start + back_mag, 1.0))])
    return NetworkGeometry(L, L, L, L, fwd, fwd, fwd, fwd, back, back)


def _check_symmetric(fwd_mag, back_mag, overlap_mag):
    if min(fwd_mag, back_mag, overlap_mag) < 0:
        raise ValueError("interval magnitudes must be nonnegative")
    if overlap_mag > min(fwd_mag, back_mag) + TOL:
        raise ValueError(f"overlap {overlap_mag} exceeds forward {fwd_mag} or backscatter {back_mag} size")


def overlapped_scenario(L_BS: float, L_Usr: float, psi_mag: float) -> dict[str, Any]:
    if min(L_BS, L_Usr, psi_mag) < 0:
        raise ValueError("scenario inputs must be nonnegative")
    per_user = psi_mag * min(2 * L_BS, 2 * L_Usr)
    fd = make_region(per_user, per_user, 2 * L_BS * psi_mag)
    trivial = psi_mag == 0 or L_BS == 0
    return {
        "fd": fd,
        "hd_sum": per_user,
        "fd_beats_hd": psi_mag > 0 and L_Usr > 0 and L_BS > L_Usr,
        "rectangular": trivial or L_BS >= 2 * L_Usr,
    }


def symmetric_scenario(L: float, fwd_mag: float, back_mag: float, overlap_mag: float) -> dict[str, Any]:
    if L < 0:
        raise ValueError("array half-length must be nonnegative")
    _check_symmetric(fwd_mag, back_mag, overlap_mag)
    per_user = 2 * L * fwd_mag
    total = 2 * L * (2 * (fwd_mag - overlap_mag) + back_mag)
    fd = make_region(per_user, per_user, total)
    full_overlap = abs(fwd_mag - overlap_mag) <= TOL and abs(back_mag - overlap_mag) <= TOL
    return {
        "fd": fd,
        "hd_sum": per_user,
        "rectangular": L == 0 or back_mag - overlap_mag >= overlap_mag - TOL,
        "hd_equals_fd": L == 0 or fwd_mag == 0 or full_overlap,
    }


def mimo_ic_dof(M1: int, N1: int, M2: int, N2: int) -> int:
    """Sum DoF of the two-user MIMO interference channel (min form)."""
    if min(M1, N1, M2, N2) < 0:
        raise ValueError("antenna counts must be nonnegative")
    return min(M1 + M2, N1 + N2, max(M1, N2), max(M2, N1))
