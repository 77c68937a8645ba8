"""Discretized three-node channel: sampled Fourier kernels or exact block model.

Every operator acts on wavevector-domain sample vectors. Physical mode samples
direction cosines on a uniform grid with square-root trapezoid weights folded
in, so plain Euclidean inner products approximate the continuous ones. Block
mode gives each dimension of each scattering atom its own coordinate.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .intervals import IntervalSet
from .linalg import Subspace, numerical_rank, singular_system
from .regions import NetworkGeometry

log = logging.getLogger(__name__)

HALF_POWER = 2 ** -0.5
BLOCK_SUPPORT_TOL = 1e-10

# node -> (geometry L field, intervals whose union the node sees)
NODE_INTERVALS = {
    "T1": ("L_T1", ("psi_T11",)),
    "T2": ("L_T2", ("psi_T22", "psi_T12")),
    "R1": ("L_R1", ("psi_R11", "psi_R12")),
    "R2": ("L_R2", ("psi_R22",)),
}
# operator -> (receiving node, transmitting node, rx interval, tx interval)
LINKS = {
    "H11": ("R1", "T1", "psi_R11", "psi_T11"),
    "H12": ("R1", "T2", "psi_R12", "psi_T12"),
    "H22": ("R2", "T2", "psi_R22", "psi_T22"),
}


@dataclass(frozen=True)
class GridSpec:
    n_wavevector: int = 256
    oversampling: float = 8.0
    seed: int = 0
    # relative singular-value cut separating the array-limited cluster from the plunge
    rank_threshold: float = HALF_POWER
    # allowed off-support amplitude for "vanishes outside an interval"
    support_tol: float = 1e-2

    def __post_init__(self):
        if self.n_wavevector < 16:
            raise ValueError(f"n_wavevector must be at least 16, got {self.n_wavevector}")
        if not self.oversampling >= 1.0:
            raise ValueError(f"oversampling must be >= 1, got {self.oversampling}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not 0.0 < self.rank_threshold < 1.0:
            raise ValueError("rank_threshold must lie in (0, 1)")

    def t_grid(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_wavevector)

    def t_weights(self) -> np.ndarray:
        return _trapezoid_weights(self.n_wavevector, 2.0 / (self.n_wavevector - 1))

    def p_grid(self, L: float) -> tuple[np.ndarray, np.ndarray]:
        """Array sample positions on [-L, L] and their quadrature weights."""
        if L == 0:
            return np.zeros(1), np.ones(1)
        step = 1.0 / (2.0 * self.oversampling)
        count = int(math.floor(2 * L / step + 1e-9)) + 1
        if count < 2:
            return np.zeros(1), np.full(1, 2 * L)
        p = np.linspace(-L, L, count)
        return p, _trapezoid_weights(count, 2 * L / (count - 1))


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return w


def array_response(L: float, grid: GridSpec, direction: str = "transmit") -> np.ndarray:
    """Sampled Fourier kernel between array positions and direction cosines.

    transmit: t-grid x p-grid matrix of exp(-i 2 pi p t).
    receive: p-grid x t-grid matrix of exp(+i 2 pi p t) (the adjoint kernel).
    """
    if L < 0:
        raise ValueError("array half-length must be nonnegative")
    if direction not in ("transmit", "receive"):
        raise ValueError(f"direction must be 'transmit' or 'receive', got {direction!r}")
    t, wt = grid.t_grid(), grid.t_weights()
    p, wp = grid.p_grid(L)
    a = np.sqrt(wt)[:, None] * np.exp(-2j * np.pi * np.outer(t, p)) * np.sqrt(wp)[None, :]
    return a if direction == "transmit" else a.conj().T


def response_space(A_transmit_form: np.ndarray, keep_mask: np.ndarray, threshold: float) -> Subspace:
    """Dominant range of a t-grid x p-grid response restricted to `keep_mask` rows."""
    restricted = np.where(keep_mask[:, None], A_transmit_form, 0.0)
    sv = singular_system(restricted, threshold)
    return Subspace(restricted.shape[0], sv.left[:, : sv.rank])


def random_scattering(psi_R: IntervalSet, psi_T: IntervalSet, grid: GridSpec,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """i.i.d. circular Gaussian kernel samples on the Psi_R x Psi_T cells, zero elsewhere."""
    if rng is None:
        rng = np.random.default_rng(grid.seed)
    t = grid.t_grid()
    return _masked_gaussian(psi_R.contains(t), psi_T.contains(t), rng)


def _masked_gaussian(rows: np.ndarray, cols: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    shape = (rows.size, cols.size)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    return g * np.outer(rows, cols)


@dataclass
class WavevectorSignal:
    """Samples of a wavevector-domain field; `domain` is its intended support."""

    domain: IntervalSet
    samples: np.ndarray
    points: np.ndarray

    def off_domain_energy(self) -> float:
        outside = ~self.domain.contains(self.points)
        return float(np.sum(np.abs(self.samples[outside]) ** 2))

    def off_domain_amplitude(self) -> float:
        total = float(np.linalg.norm(self.samples))
        return 0.0 if total == 0.0 else math.sqrt(self.off_domain_energy()) / total


class NonIntegerDimensionError(ValueError):
    def __init__(self, expression: str, value: float):
        super().__init__(f"non-integer dimension: {expression} = {value:g}")
        self.expression = expression
        self.value = value


@dataclass
class ChannelOperators:
    H11: np.ndarray
    H12: np.ndarray
    H22: np.ndarray
    A_T1: np.ndarray
    A_T2: np.ndarray
    A_R1: np.ndarray
    A_R2: np.ndarray
    mode: str
    tx_space_1: Subspace
    tx_space_2: Subspace
    rx_space_1: Subspace
    rx_space_2: Subspace
    # wavevector coordinate of each ambient sample, per node
    points: dict[str, np.ndarray]
    geometry: NetworkGeometry
    support_tol: float = BLOCK_SUPPORT_TOL
    grid: GridSpec | None = None
    # pair-restricted domain/codomain spaces (physical mode only)
    _pair_spaces: dict = field(default_factory=dict, repr=False)

    def space(self, node: str) -> Subspace:
        return {"T1": self.tx_space_1, "T2": self.tx_space_2,
                "R1": self.rx_space_1, "R2": self.rx_space_2}[node]

    def operator(self, name: str) -> np.ndarray:
        return {"H11": self.H11, "H12": self.H12, "H22": self.H22}[name]

    def support_subspace(self, node: str, keep: IntervalSet) -> Subspace:
        return support_subspace(self.space(node), keep, self.points[node], self.support_tol)

    def compress(self, name: str, rx: Subspace | None = None, tx: Subspace | None = None) -> np.ndarray:
        """Matrix of H_ij between orthonormal coordinates of `tx` and `rx`."""
        rx_node, tx_node = LINKS[name][:2]
        rx = rx or self.space(rx_node)
        tx = tx or self.space(tx_node)
        return rx.basis.conj().T @ self.operator(name) @ tx.basis

    def composite(self, name: str) -> np.ndarray:
        """Array-to-array kernel A_R H A_T."""
        rx_node, tx_node = LINKS[name][:2]
        a_r = {"R1": self.A_R1, "R2": self.A_R2}[rx_node]
        a_t = {"T1": self.A_T1, "T2": self.A_T2}[tx_node]
        return a_r @ self.operator(name) @ a_t

    def pair_spaces(self, name: str) -> tuple[Subspace, Subspace]:
        """Receive and transmit spaces seen through link `name` alone."""
        rx_node, tx_node, rx_psi, tx_psi = LINKS[name]
        g = self.geometry
        if self.mode == "blockmodel":
            return (self.support_subspace(rx_node, getattr(g, rx_psi)),
                    self.support_subspace(tx_node, getattr(g, tx_psi)))
        if name not in self._pair_spaces:
            a_r = {"R1": self.A_R1, "R2": self.A_R2}[rx_node].conj().T
            a_t = {"T1": self.A_T1, "T2": self.A_T2}[tx_node]
            thr = self.grid.rank_threshold
            self._pair_spaces[name] = (
                response_space(a_r, getattr(g, rx_psi).contains(self.points[rx_node]), thr),
                response_space(a_t, getattr(g, tx_psi).contains(self.points[tx_node]), thr),
            )
        return self._pair_spaces[name]

    def link_rank(self, name: str, rel_tol: float = 1e-3) -> int:
        """Rank of H_ij between the array-limited spaces of its own intervals."""
        rx, tx = self.pair_spaces(name)
        if rx.dim == 0 or tx.dim == 0:
            return 0
        return numerical_rank(self.compress(name, rx, tx), rel_tol)

    def dims(self) -> dict[str, int]:
        return {node: self.space(node).dim for node in NODE_INTERVALS}

    def dual(self) -> "ChannelOperators":
        """Reciprocal network: receivers become transmitters, operators adjoint.

        The dual's T1 is this R2, its R1 is this T2, its T2 is this R1 and its
        R2 is this T1; it matches `geometry.mirrored()`.
        """
        pts = self.points
        return ChannelOperators(
            H11=self.H22.conj().T, H12=self.H12.conj().T, H22=self.H11.conj().T,
            A_T1=self.A_R2.conj().T, A_T2=self.A_R1.conj().T,
            A_R1=self.A_T2.conj().T, A_R2=self.A_T1.conj().T,
            mode=self.mode,
            tx_space_1=self.rx_space_2, tx_space_2=self.rx_space_1,
            rx_space_1=self.tx_space_2, rx_space_2=self.tx_space_1,
            points={"T1": pts["R2"], "T2": pts["R1"], "R1": pts["T2"], "R2": pts["T1"]},
            geometry=self.geometry.mirrored(),
            support_tol=self.support_tol,
            grid=self.grid,
        )


def support_subspace(space: Subspace, keep: IntervalSet, points: np.ndarray, tol: float) -> Subspace:
    """Members of `space` whose samples off `keep` have norm at most `tol`."""
    off = ~keep.contains(points)
    if not off.any():
        return space
    if space.dim == 0:
        return space
    _, sig, vh = np.linalg.svd(space.basis[off, :], full_matrices=True)
    sig = np.concatenate([sig, np.zeros(space.dim - len(sig))])
    coeffs = vh.conj().T[:, sig <= tol]
    if coeffs.shape[1] == 0:
        return Subspace.zero(space.ambient_dim)
    # re-orthonormalize inside the span so the basis stays exact
    q, _ = np.linalg.qr(space.basis @ coeffs)
    return Subspace(space.ambient_dim, q)


def node_union(g: NetworkGeometry, node: str) -> IntervalSet:
    out = IntervalSet()
    for name in NODE_INTERVALS[node][1]:
        out = out | getattr(g, name)
    return out


def compose_channel(geom: NetworkGeometry, grid: GridSpec) -> ChannelOperators:
    """Physical-mode channel from sampled array responses and random scattering."""
    t = grid.t_grid()
    sqrt_w = np.sqrt(grid.t_weights())
    streams = np.random.default_rng(grid.seed).spawn(3)

    A = {node: array_response(getattr(geom, lname), grid, "transmit")
         for node, (lname, _) in NODE_INTERVALS.items()}
    spaces = {}
    for node, (lname, _) in NODE_INTERVALS.items():
        spaces[node] = response_space(A[node], node_union(geom, node).contains(t), grid.rank_threshold)
        expected = 2 * getattr(geom, lname) * node_union(geom, node).measure
        if abs(spaces[node].dim - expected) > 1 and expected >= 1:
            log.warning("%s space has dimension %d, expected %.3g +- 1", node, spaces[node].dim, expected)

    H = {}
    for (name, (_, _, rx_psi, tx_psi)), rng in zip(LINKS.items(), streams):
        s = random_scattering(getattr(geom, rx_psi), getattr(geom, tx_psi), grid, rng)
        H[name] = sqrt_w[:, None] * s * sqrt_w[None, :]

    return ChannelOperators(
        H11=H["H11"], H12=H["H12"], H22=H["H22"],
        A_T1=A["T1"], A_T2=A["T2"],
        A_R1=A["R1"].conj().T, A_R2=A["R2"].conj().T,
        mode="physical",
        tx_space_1=spaces["T1"], tx_space_2=spaces["T2"],
        rx_space_1=spaces["R1"], rx_space_2=spaces["R2"],
        points={node: t for node in NODE_INTERVALS},
        geometry=geom,
        support_tol=grid.support_tol,
        grid=grid,
    )


# ---------------------------------------------------------------------------
# block model

def _atoms(g: NetworkGeometry) -> dict[str, list[tuple[str, IntervalSet]]]:
    return {
        "T1": [("psi_T11", g.psi_T11)],
        "T2": [("psi_T22 \\ psi_T12", g.psi_T22 - g.psi_T12),
               ("psi_T22 & psi_T12", g.psi_T22 & g.psi_T12),
               ("psi_T12 \\ psi_T22", g.psi_T12 - g.psi_T22)],
        "R1": [("psi_R11 \\ psi_R12", g.psi_R11 - g.psi_R12),
               ("psi_R11 & psi_R12", g.psi_R11 & g.psi_R12),
               ("psi_R12 \\ psi_R11", g.psi_R12 - g.psi_R11)],
        "R2": [("psi_R22", g.psi_R22)],
    }


def _quantile_points(atom: IntervalSet, count: int) -> np.ndarray:
    """`count` points splitting the atom's measure evenly, one per cell midpoint."""
    if count == 0:
        return np.zeros(0)
    lengths = np.array([hi - lo for lo, hi in atom.segments])
    starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    targets = (np.arange(count) + 0.5) / count * atom.measure
    idx = np.clip(np.searchsorted(starts, targets, side="right") - 1, 0, len(lengths) - 1)
    lows = np.array([lo for lo, _ in atom.segments])
    return lows[idx] + (targets - starts[idx])


def block_counts(g: NetworkGeometry) -> dict[str, list[tuple[str, int, IntervalSet]]]:
    """Integer coordinate count of every atom; raises on non-integer dimensions."""
    out = {}
    for node, atoms in _atoms(g).items():
        lname = NODE_INTERVALS[node][0]
        L = getattr(g, lname)
        rows = []
        for label, atom in atoms:
            value = 2 * L * atom.measure
            count = round(value)
            if abs(value - count) > 1e-9:
                raise NonIntegerDimensionError(f"2*{lname}*|{label}|", value)
            rows.append((label, count, atom))
        out[node] = rows
    return out


def blockmodel_channel(geom: NetworkGeometry, seed: int = 0) -> ChannelOperators:
    """Exact finite-dimensional surrogate: one coordinate per dimension."""
    counts = block_counts(geom)
    points = {
        node: np.concatenate([_quantile_points(atom, k) for _, k, atom in rows])
        for node, rows in counts.items()
    }
    streams = np.random.default_rng(seed).spawn(3)
    H = {}
    for (name, (rx_node, tx_node, rx_psi, tx_psi)), rng in zip(LINKS.items(), streams):
        rows = getattr(geom, rx_psi).contains(points[rx_node])
        cols = getattr(geom, tx_psi).contains(points[tx_node])
        H[name] = _masked_gaussian(rows, cols, rng)

    eye = {node: np.eye(len(p), dtype=complex) for node, p in points.items()}
    return ChannelOperators(
        H11=H["H11"], H12=H["H12"], H22=H["H22"],
        A_T1=eye["T1"], A_T2=eye["T2"], A_R1=eye["R1"], A_R2=eye["R2"],
        mode="blockmodel",
        tx_space_1=Subspace.full(len(points["T1"])),
        tx_space_2=Subspace.full(len(points["T2"])),
        rx_space_1=Subspace.full(len(points["R1"])),
        rx_space_2=Subspace.full(len(points["R2"])),
        points=points,
        geometry=geom,
        support_tol=BLOCK_SUPPORT_TOL,
    )


def build_channel(geom: NetworkGeometry, mode: str, seed: int = 0,
                  grid: GridSpec | None = None) -> ChannelOperators:
    if mode == "blockmodel":
        return blockmodel_channel(geom, seed)
    if mode == "physical":
        grid = replace(grid or GridSpec(), seed=seed)
        return compose_channel(geom, grid)
    raise ValueError(f"no channel operators in mode {mode!r}")


# ---------------------------------------------------------------------------
# export

def save_bundle(ch: ChannelOperators, path: str | Path) -> None:
    """Write operators and metadata to a single .npz archive."""
    meta = {
        "mode": ch.mode,
        "geometry": ch.geometry.to_dict(),
        "support_tol": ch.support_tol,
        "grid": None if ch.grid is None else {
            "n_wavevector": ch.grid.n_wavevector, "oversampling": ch.grid.oversampling,
            "seed": ch.grid.seed, "rank_threshold": ch.grid.rank_threshold,
            "support_tol": ch.grid.support_tol,
        },
    }
    arrays = {name: getattr(ch, name) for name in ("H11", "H12", "H22", "A_T1", "A_T2", "A_R1", "A_R2")}
    for node in NODE_INTERVALS:
        arrays[f"space_{node}"] = ch.space(node).basis
        arrays[f"points_{node}"] = ch.points[node]
    np.savez(path, metadata=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_bundle(path: str | Path) -> ChannelOperators:
    with np.load(path) as data:
        meta = json.loads(str(data["metadata"]))
        arr = {k: data[k] for k in data.files if k != "metadata"}
    spaces = {node: Subspace(arr[f"space_{node}"].shape[0], arr[f"space_{node}"]) for node in NODE_INTERVALS}
    return ChannelOperators(
        H11=arr["H11"], H12=arr["H12"], H22=arr["H22"],
        A_T1=arr["A_T1"], A_T2=arr["A_T2"], A_R1=arr["A_R1"], A_R2=arr["A_R2"],
        mode=meta["mode"],
        tx_space_1=spaces["T1"], tx_space_2=spaces["T2"],
        rx_space_1=spaces["R1"], rx_space_2=spaces["R2"],
        points={node: arr[f"points_{node}"] for node in NODE_INTERVALS},
        geometry=NetworkGeometry.from_dict(meta["geometry"]),
        support_tol=meta["support_tol"],
        grid=None if meta["grid"] is None else GridSpec(**meta["grid"]),
    )
