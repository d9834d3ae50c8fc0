"""Marginally stable signal generators and their network ensembles.

Constant and sinusoidal disturbance signals are modelled as outputs of
an autonomous generator with a skew-symmetric state matrix in block
form: an optional 1x1 zero block for the constant component followed by
a 2x2 rotation block per frequency.  That structure makes the flow a
pure rotation, so trajectories are evaluated in closed form instead of
being integrated; signal amplitude is preserved exactly.

The same generator drives the auxiliary systems whose outputs cancel
the disagreement component of the disturbances through the coupling
Laplacian.  Their initial conditions are constructed here from the
Laplacian pseudoinverse and an observability-matrix change of basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import warnings

import numpy as np

from .linsolve import SingularMatrixError, cond_inf, matrix_rank, solve
from .lti import Polynomial
from .netgraph import Laplacian, laplacian_pseudoinverse, projection_pair

__all__ = [
    "SignalSpec",
    "NodeSignal",
    "Exosystem",
    "DisturbanceEnsemble",
    "AuxiliarySystem",
    "AuxEnsemble",
    "canonical_generator",
    "observability_matrix",
    "design_aux_systems",
]

_SKEW_TOL = 1e-12
_CANCEL_GRID_TOL = 1e-8


@dataclass(frozen=True)
class SignalSpec:
    """Class of signals: optional constant plus sinusoids at fixed frequencies.

    Frequencies are strictly positive, pairwise distinct and stored
    sorted ascending.  The spec must contain at least one component.
    """

    has_constant: bool
    frequencies: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        freqs = tuple(float(w) for w in self.frequencies)
        if any(w <= 0.0 for w in freqs):
            raise ValueError("frequencies must be strictly positive")
        if len(set(freqs)) != len(freqs):
            raise ValueError("frequencies must be pairwise distinct")
        if not self.has_constant and not freqs:
            raise ValueError("signal class is empty")
        object.__setattr__(self, "frequencies", tuple(sorted(freqs)))

    @property
    def dim(self) -> int:
        """Generator state dimension: one per constant, two per sinusoid."""
        return (1 if self.has_constant else 0) + 2 * len(self.frequencies)

    def denominator(self) -> Polynomial:
        """Minimal polynomial of the class: s^(0 or 1) * prod(s^2 + w^2)."""
        p = Polynomial([0.0, 1.0]) if self.has_constant else Polynomial([1.0])
        for w in self.frequencies:
            p = p * Polynomial([w * w, 0.0, 1.0])
        return p

    def covers(self, other: "SignalSpec") -> bool:
        """True when every component of ``other`` belongs to this class."""
        if other.has_constant and not self.has_constant:
            return False
        return set(other.frequencies) <= set(self.frequencies)

    @staticmethod
    def union(specs) -> "SignalSpec":
        specs = list(specs)
        if not specs:
            raise ValueError("cannot take a union of no signal classes")
        has_constant = any(s.has_constant for s in specs)
        freqs: set[float] = set()
        for s in specs:
            freqs.update(s.frequencies)
        return SignalSpec(has_constant, tuple(sorted(freqs)))


@dataclass(frozen=True)
class NodeSignal:
    """One node's disturbance: a constant offset plus sinusoidal terms.

    ``sinusoids`` holds ``(omega, amplitude, phase)`` triples, each
    contributing ``amplitude * cos(omega * t + phase)``.
    """

    constant: float = 0.0
    sinusoids: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        canonical = []
        seen = set()
        for term in self.sinusoids:
            if len(term) != 3:
                raise ValueError(f"sinusoid {term!r} is not (omega, amplitude, phase)")
            w, a, ph = (float(v) for v in term)
            if w <= 0.0:
                raise ValueError("sinusoid frequency must be strictly positive")
            if w in seen:
                raise ValueError(f"duplicate sinusoid frequency {w}")
            seen.add(w)
            canonical.append((w, a, ph))
        object.__setattr__(self, "sinusoids", tuple(canonical))
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def is_zero(self) -> bool:
        return self.constant == 0.0 and all(a == 0.0 for _, a, _ in self.sinusoids)

    def spec(self) -> SignalSpec | None:
        """Smallest signal class containing this signal, or None if zero."""
        freqs = tuple(w for w, a, _ in self.sinusoids if a != 0.0)
        if self.constant == 0.0 and not freqs:
            return None
        return SignalSpec(self.constant != 0.0 or not freqs, freqs)

    def value(self, t):
        out = self.constant * np.ones_like(np.asarray(t, dtype=float))
        for w, a, ph in self.sinusoids:
            out = out + a * np.cos(w * np.asarray(t, dtype=float) + ph)
        return out if out.ndim else float(out)


def canonical_generator(spec: SignalSpec) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal skew generator and output row for a signal class.

    Returns ``(a, c)`` where the output reads the constant state and the
    first coordinate of every rotation block.
    """
    n = spec.dim
    a = np.zeros((n, n))
    c = np.zeros(n)
    offset = 0
    if spec.has_constant:
        c[0] = 1.0
        offset = 1
    for k, w in enumerate(spec.frequencies):
        i = offset + 2 * k
        a[i, i + 1] = -w
        a[i + 1, i] = w
        c[i] = 1.0
    return a, c


def observability_matrix(a, row) -> np.ndarray:
    """Stacked rows ``row @ a^k`` for k = 0..n-1."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("expected a square state matrix")
    row = np.asarray(row, dtype=float).reshape(-1)
    if row.shape != (n,):
        raise ValueError("output row length must match the state dimension")
    out = np.empty((n, n))
    current = row.copy()
    for k in range(n):
        out[k] = current
        current = current @ a
    return out


def _scan_blocks(a: np.ndarray) -> tuple[bool, tuple[float, ...]]:
    """Recover the canonical block layout from a generator matrix.

    Raises ``ValueError`` when the matrix is not in the canonical form
    (optional leading zero block, then 2x2 rotation blocks).
    """
    n = a.shape[0]
    if np.abs(a + a.T).max() > _SKEW_TOL:
        raise ValueError("generator matrix must be skew-symmetric")
    has_constant = bool(n % 2 == 1)
    offset = 1 if has_constant else 0
    if has_constant and np.abs(a[0]).max() > 0.0:
        raise ValueError("odd-dimensional generator must lead with a zero block")
    check = a.copy()
    freqs = []
    for i in range(offset, n, 2):
        w = a[i + 1, i]
        if w <= 0.0:
            raise ValueError("rotation blocks must carry positive frequencies")
        freqs.append(float(w))
        check[i, i + 1] = 0.0
        check[i + 1, i] = 0.0
    if np.abs(check).max() > 0.0:
        raise ValueError("generator matrix is not block-diagonal in canonical form")
    return has_constant, tuple(freqs)


def _rotate(states: np.ndarray, layout: tuple[bool, tuple[float, ...]], t: float) -> np.ndarray:
    """Apply the closed-form flow to rows of generator states."""
    has_constant, freqs = layout
    out = np.array(states, dtype=float)
    offset = 1 if has_constant else 0
    for k, w in enumerate(freqs):
        i = offset + 2 * k
        cwt = np.cos(w * t)
        swt = np.sin(w * t)
        x = states[..., i]
        y = states[..., i + 1]
        out[..., i] = cwt * x - swt * y
        out[..., i + 1] = swt * x + cwt * y
    return out


@dataclass(frozen=True, eq=False)
class Exosystem:
    """Autonomous generator in canonical block form with one output row.

    The pair ``(a, c)`` must be observable so that the output determines
    the state; trajectories are evaluated exactly via block rotations.
    """

    a: np.ndarray
    c: np.ndarray
    state0: np.ndarray
    _layout: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        n = a.shape[0]
        c = np.asarray(self.c, dtype=float).reshape(-1)
        x0 = np.asarray(self.state0, dtype=float).reshape(-1)
        if a.shape != (n, n):
            raise ValueError("generator matrix must be square")
        if c.shape != (n,) or x0.shape != (n,):
            raise ValueError("output row and initial state must match the generator size")
        layout = _scan_blocks(a)
        if matrix_rank(observability_matrix(a, c)) != n:
            raise ValueError("generator/output pair is unobservable")
        for name, arr in (("a", a), ("c", c), ("state0", x0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_layout", layout)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def evolve(self, t: float) -> tuple[np.ndarray, float]:
        """State and output at time ``t``, evaluated in closed form."""
        state = _rotate(self.state0, self._layout, float(t))
        return state, float(self.c @ state)


class DisturbanceEnsemble:
    """Per-node disturbances sharing one generator.

    All nodes use the same canonical ``(a, c)`` pair built from a common
    signal class; only the initial generator states differ.  Outputs are
    evaluated in closed form, including on whole time grids at once.
    """

    def __init__(self, spec: SignalSpec, states0, node_signals=None) -> None:
        self.spec = spec
        self.node_signals = tuple(node_signals) if node_signals is not None else None
        a, c = canonical_generator(spec)
        states0 = np.atleast_2d(np.asarray(states0, dtype=float))
        if states0.shape[1] != spec.dim:
            raise ValueError(
                f"initial states have width {states0.shape[1]}, expected {spec.dim}"
            )
        self.a = a
        self.c = c
        self.states0 = states0
        for arr in (self.a, self.c, self.states0):
            arr.setflags(write=False)
        self._layout = (spec.has_constant, spec.frequencies)
        # Coefficient form phi(t) = const + cos_coef @ cos(w t) + sin_coef @ sin(w t)
        offset = 1 if spec.has_constant else 0
        self._const = states0[:, 0].copy() if spec.has_constant else np.zeros(len(states0))
        idx = offset + 2 * np.arange(len(spec.frequencies), dtype=int)
        self._cos_coef = states0[:, idx] if len(spec.frequencies) else np.zeros((len(states0), 0))
        self._sin_coef = -states0[:, idx + 1] if len(spec.frequencies) else np.zeros((len(states0), 0))
        self._omegas = np.array(spec.frequencies)

    @classmethod
    def from_node_signals(cls, signals, spec: SignalSpec | None = None) -> "DisturbanceEnsemble":
        """Build from per-node :class:`NodeSignal` values.

        ``spec`` may widen the signal class (useful when the internal
        model must cover components absent from some nodes); it must
        cover every nonzero component present in ``signals``.
        """
        signals = list(signals)
        node_specs = [s.spec() for s in signals]
        present = [s for s in node_specs if s is not None]
        if spec is None:
            if not present:
                raise ValueError("all node signals are zero; no signal class to infer")
            spec = SignalSpec.union(present)
        else:
            for k, ns in enumerate(node_specs):
                if ns is not None and not spec.covers(ns):
                    raise ValueError(f"node {k + 1} signal lies outside the signal class")
        states0 = np.zeros((len(signals), spec.dim))
        offset = 1 if spec.has_constant else 0
        index = {w: offset + 2 * k for k, w in enumerate(spec.frequencies)}
        for row, sig in zip(states0, signals):
            if spec.has_constant:
                row[0] = sig.constant
            for w, amp, ph in sig.sinusoids:
                i = index[w]
                row[i] = amp * np.cos(ph)
                row[i + 1] = amp * np.sin(ph)
        return cls(spec, states0, node_signals=signals)

    @property
    def n_nodes(self) -> int:
        return self.states0.shape[0]

    def exosystems(self) -> list[Exosystem]:
        """Per-node generator views (shared ``a`` and ``c``)."""
        return [Exosystem(self.a, self.c, row) for row in self.states0]

    def rotate_states(self, t: float) -> np.ndarray:
        return _rotate(self.states0, self._layout, float(t))

    def phi(self, t: float) -> np.ndarray:
        """All node outputs at time ``t``."""
        out = self._const.copy()
        if self._omegas.size:
            angles = self._omegas * float(t)
            out = out + self._cos_coef @ np.cos(angles) + self._sin_coef @ np.sin(angles)
        return out

    def phi_grid(self, times) -> np.ndarray:
        """Node outputs on a whole time grid, shape (n_nodes, len(times))."""
        times = np.asarray(times, dtype=float)
        out = np.repeat(self._const[:, None], times.size, axis=1)
        if self._omegas.size:
            angles = np.outer(self._omegas, times)
            out = out + self._cos_coef @ np.cos(angles) + self._sin_coef @ np.sin(angles)
        return out


@dataclass(frozen=True, eq=False)
class AuxiliarySystem:
    """Auxiliary generator copy: input row ``b`` and initial state ``z0``."""

    b: np.ndarray
    z0: np.ndarray


class AuxEnsemble:
    """Stacked auxiliary systems sharing the ensemble's generator."""

    def __init__(self, spec: SignalSpec, b_rows, z0s) -> None:
        self.spec = spec
        self.a, _ = canonical_generator(spec)
        self.b_rows = np.atleast_2d(np.asarray(b_rows, dtype=float))
        self.z0s = np.atleast_2d(np.asarray(z0s, dtype=float))
        if self.b_rows.shape != self.z0s.shape or self.b_rows.shape[1] != spec.dim:
            raise ValueError("auxiliary rows and states must be n_nodes x dim")
        self._layout = (spec.has_constant, spec.frequencies)

    def systems(self) -> list[AuxiliarySystem]:
        return [AuxiliarySystem(b, z) for b, z in zip(self.b_rows, self.z0s)]

    def lam(self, t: float) -> np.ndarray:
        """Auxiliary outputs ``lam_i(t) = b_i . z_i(t)`` for all nodes."""
        rotated = _rotate(self.z0s, self._layout, float(t))
        return np.einsum("ij,ij->i", self.b_rows, rotated)

    def lam_grid(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.empty((self.z0s.shape[0], times.size))
        for k, t in enumerate(times):
            out[:, k] = self.lam(float(t))
        return out


def design_aux_systems(
    ensemble: DisturbanceEnsemble,
    laplacian: Laplacian,
    b_rows=None,
    verify_times=None,
) -> AuxEnsemble:
    """Initial conditions making auxiliary outputs cancel disagreement.

    Projects the stacked generator states through the Laplacian
    pseudoinverse, then maps each node's projected state into its own
    input-row coordinates via the observability matrices of ``(a, c)``
    and ``(a, b_i)``.  The construction is verified on a time grid: the
    centered disturbance vector must equal the Laplacian image of the
    auxiliary outputs to within 1e-8 at every checked instant.

    Parameters
    ----------
    ensemble : DisturbanceEnsemble
        Disturbances to cancel.
    laplacian : Laplacian
        Coupling Laplacian of the internal-model graph (connected).
    b_rows : optional
        Per-node auxiliary input rows, shape (n_nodes, dim); defaults to
        the ensemble output row for every node.
    verify_times : optional
        Time grid for the construction check; defaults to 0..10 in
        steps of 0.1.
    """
    n_nodes = ensemble.n_nodes
    if laplacian.graph.n_nodes != n_nodes:
        raise ValueError("Laplacian size does not match the number of nodes")
    dim = ensemble.spec.dim
    if b_rows is None:
        b_rows = np.tile(ensemble.c, (n_nodes, 1))
    else:
        b_rows = np.atleast_2d(np.asarray(b_rows, dtype=float))
        if b_rows.shape != (n_nodes, dim):
            raise ValueError(f"b_rows must have shape ({n_nodes}, {dim})")

    pinv = laplacian_pseudoinverse(laplacian)
    projected = pinv @ ensemble.states0

    obs_c = observability_matrix(ensemble.a, ensemble.c)
    z0s = np.empty_like(projected)
    shared = all(np.array_equal(b_rows[0], row) for row in b_rows[1:])
    rows_iter = [b_rows[0]] if shared else list(b_rows)
    obs_list = []
    for row in rows_iter:
        obs_b = observability_matrix(ensemble.a, row)
        cond = cond_inf(obs_b)
        if cond > 1e8:
            warnings.warn(
                f"auxiliary pair is near-unobservable (condition number {cond:.2e})",
                RuntimeWarning,
                stacklevel=2,
            )
        obs_list.append(obs_b)
    try:
        if shared:
            z0s = solve(obs_list[0], obs_c @ projected.T).T
        else:
            for k in range(n_nodes):
                z0s[k] = solve(obs_list[k], obs_c @ projected[k])
    except SingularMatrixError as exc:
        raise ValueError("auxiliary pair unobservable") from exc

    aux = AuxEnsemble(ensemble.spec, b_rows, z0s)

    if verify_times is None:
        verify_times = np.arange(0.0, 10.0 + 1e-9, 0.1)
    centering = projection_pair(n_nodes).centering
    phi = ensemble.phi_grid(verify_times)
    lam = aux.lam_grid(verify_times)
    residual = centering @ phi - laplacian.matrix @ lam
    worst = float(np.sqrt((residual * residual).sum(axis=0)).max())
    if worst > _CANCEL_GRID_TOL:
        raise RuntimeError(
            f"internal error: disagreement cancellation residual {worst:.3e} "
            f"exceeds {_CANCEL_GRID_TOL:.1e} on the verification grid"
        )
    return aux
