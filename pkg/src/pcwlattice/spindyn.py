"""Dense master-equation evolution of up to ten effective spins.

Local basis: index 0 is ``g1`` (``sigma^z = +1``), index 1 is ``g2``. Site 0
is the leftmost Kronecker factor. ``sigma^- = |g1><g2|`` is the jump operator
of the xy channel, ``sigma^z`` that of the z channel.
"""
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import DomainError, StiffnessError

MAX_SPINS = 10
TRACE_TOL = 1e-9
HERM_TOL = 1e-9

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])
SIGMA_PLUS = SIGMA_MINUS.T.copy()


class IntegrityWarning(UserWarning):
    """Trace or Hermiticity drifted beyond tolerance during integration."""


def _check_size(n):
    if not 1 <= n <= MAX_SPINS:
        raise DomainError(f"dense evolution supports 1..{MAX_SPINS} spins, got {n}")


@lru_cache(maxsize=64)
def _site_op(name, i, n):
    local = {"z": SIGMA_Z, "minus": SIGMA_MINUS, "plus": SIGMA_PLUS}[name]
    left = sp.identity(2**i, format="csr")
    right = sp.identity(2 ** (n - i - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(local)), right, format="csr")


def site_operator(name, i, n):
    """``sigma^z``, ``sigma^-`` or ``sigma^+`` (``name`` in z/minus/plus) on site ``i`` of ``n``."""
    _check_size(n)
    if not 0 <= i < n:
        raise DomainError(f"site {i} out of range for {n} spins")
    return _site_op(name, i, n)


# ---------------------------------------------------------------- states


@dataclass(frozen=True)
class DensityMatrix:
    """Validated ``2^N x 2^N`` density matrix."""

    data: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.data, dtype=complex)
        dim = rho.shape[0]
        if rho.ndim != 2 or rho.shape[1] != dim or dim < 2 or dim & (dim - 1):
            raise DomainError("density matrix must be square with a power-of-two dimension")
        _check_size(dim.bit_length() - 1)
        errs = state_errors(rho)
        if errs["hermiticity"] > 1e-12 or errs["trace"] > 1e-12 or errs["min_eigenvalue"] < -1e-10:
            raise DomainError(f"not a valid density matrix: {errs}")
        object.__setattr__(self, "data", rho)

    @property
    def n_spins(self):
        return self.data.shape[0].bit_length() - 1

    @classmethod
    def from_ket(cls, psi):
        psi = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise DomainError("zero state vector")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def product(cls, labels):
        return cls.from_ket(product_ket(labels))

    @classmethod
    def maximally_mixed(cls, n):
        _check_size(n)
        dim = 2**n
        return cls(np.eye(dim, dtype=complex) / dim)


def product_ket(labels):
    """State vector of a product state such as ``"g1,g2,g1"``."""
    if isinstance(labels, str):
        labels = [s.strip() for s in labels.split(",")]
    _check_size(len(labels))
    idx = 0
    for lab in labels:
        if lab not in ("g1", "g2"):
            raise DomainError(f"unknown local state {lab!r}; use g1 or g2")
        idx = 2 * idx + (lab == "g2")
    psi = np.zeros(2 ** len(labels), dtype=complex)
    psi[idx] = 1.0
    return psi


def state_errors(rho):
    rho = np.asarray(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    return {
        "trace": float(abs(np.trace(rho) - 1.0)),
        "hermiticity": herm,
        "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()),
    }


# ---------------------------------------------------------------- operators


def build_hamiltonian(model, include_onsite=True):
    """``sum_{i != j} [Jz_ij sz_i sz_j + Jxy_ij s+_i s-_j]`` as a sparse matrix (rad/s).

    With ``include_onsite`` the ``i = j`` terms are added: ``Jxy_ii s+_i s-_i``
    is a local ``g2`` energy, while ``Jz_ii sz_i sz_i`` is a constant and is
    dropped.
    """
    n = model.n_sites
    _check_size(n)
    dim = 2**n
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if model.Jz[i, j]:
                H = H + model.Jz[i, j] * (_site_op("z", i, n) @ _site_op("z", j, n))
            if model.Jxy[i, j]:
                H = H + model.Jxy[i, j] * (_site_op("plus", i, n) @ _site_op("minus", j, n))
    if include_onsite:
        H = H + onsite_hamiltonian(model)
    return H.tocsr()


def onsite_hamiltonian(model):
    n = model.n_sites
    dim = 2**n
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(n):
        if model.Jxy[i, i]:
            H = H + model.Jxy[i, i] * (_site_op("plus", i, n) @ _site_op("minus", i, n))
    return H.tocsr()


def _channels(model):
    n = model.n_sites
    out = []
    for gamma, name in ((model.gamma_xy, "minus"), (model.gamma_z, "z")):
        if not np.any(gamma):
            continue
        ops = [_site_op(name, i, n) for i in range(n)]
        daggers = [op.conj().T.tocsr() for op in ops]
        B = [sum((gamma[i, j] * daggers[j] for j in range(n) if gamma[i, j]), sp.csr_matrix(ops[0].shape))
             for i in range(n)]
        A = sum(
            (0.5 * gamma[i, j] * (daggers[j] @ ops[i]) for i in range(n) for j in range(n) if gamma[i, j]),
            sp.csr_matrix(ops[0].shape),
        )
        out.append((ops, [b.tocsr() for b in B], A.tocsr()))
    return out


class _Generator:
    """Right-hand side of the master equation on the flattened density matrix."""

    def __init__(self, model, include_onsite=True):
        self.n = model.n_sites
        self.dim = 2**self.n
        H = build_hamiltonian(model, include_onsite)
        self.channels = _channels(model)
        damp = sum((A for _, _, A in self.channels), sp.csr_matrix((self.dim, self.dim)))
        self.H = H
        self.H_eff = (H - 1j * damp).tocsr()
        self.H_eff_dag = self.H_eff.conj().T.tocsr()

    def apply(self, rho):
        out = -1j * (self.H_eff @ rho - (self.H_eff_dag.T @ rho.T).T)
        for ops, B, _ in self.channels:
            for op, b in zip(ops, B):
                if b.nnz:
                    out += op @ (b.T @ rho.T).T
        return out

    def __call__(self, t, y):
        rho = y.reshape(self.dim, self.dim)
        return self.apply(rho).ravel()


def liouvillian(model, include_onsite=True):
    """Dense superoperator acting on row-major ``vec(rho)``; for small ``N``."""
    gen = _Generator(model, include_onsite)
    d = gen.dim
    if d > 64:
        raise DomainError("dense Liouvillian limited to 6 spins")
    I = np.eye(d)
    L = -1j * (np.kron(gen.H_eff.toarray(), I) - np.kron(I, gen.H_eff_dag.toarray().T))
    for ops, B, _ in gen.channels:
        for op, b in zip(ops, B):
            L += np.kron(op.toarray(), b.toarray().T)
    return L


# ---------------------------------------------------------------- observables


def _bit_signs(n):
    idx = np.arange(2**n)
    # sigma^z eigenvalue of each site for every basis index
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


def site_magnetizations(rho):
    rho = np.asarray(rho)
    n = rho.shape[0].bit_length() - 1
    return np.real(np.diagonal(rho)) @ _bit_signs(n)


def total_magnetization(rho):
    return float(site_magnetizations(rho).sum())


def correlators(rho):
    """Matrix ``C_ij = <s+_i s-_j>``; Hermitian by construction of the trace."""
    rho = np.asarray(rho)
    n = rho.shape[0].bit_length() - 1
    C = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            op = _site_op("plus", i, n) @ _site_op("minus", j, n)
            C[i, j] = (op.multiply(rho.T)).sum()
    return C


def purity(rho):
    rho = np.asarray(rho)
    return float(np.real(np.vdot(rho, rho)))


def energy(rho, H):
    return float(np.real((H.multiply(np.asarray(rho).T)).sum()))


OBSERVABLES = ("sz", "total_sz", "purity", "correlators", "energy")


def observables(rho, request=OBSERVABLES, hamiltonian=None):
    """Evaluate the requested observables on ``rho``."""
    rho = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    out = {}
    for name in request:
        if name == "sz":
            out[name] = site_magnetizations(rho)
        elif name == "total_sz":
            out[name] = total_magnetization(rho)
        elif name == "purity":
            out[name] = purity(rho)
        elif name == "correlators":
            out[name] = correlators(rho)
        elif name == "energy":
            if hamiltonian is None:
                raise ValueError("energy needs the Hamiltonian")
            out[name] = energy(rho, hamiltonian)
        else:
            raise ValueError(f"unknown observable {name!r}")
    return out


# ---------------------------------------------------------------- evolution


@dataclass
class EvolutionResult:
    times: np.ndarray
    sz: np.ndarray
    total_sz: np.ndarray
    purity: np.ndarray
    energy: np.ndarray
    trace_error: np.ndarray
    hermiticity_error: np.ndarray
    min_eigenvalue: np.ndarray
    states: list = field(default_factory=list)
    correlators: np.ndarray = None
    flags: list = field(default_factory=list)
    n_rhs: int = 0

    def rows(self):
        """Flat records for tabular output."""
        n = self.sz.shape[1]
        out = []
        for k, t in enumerate(self.times):
            row = {"t_s": float(t)}
            for i in range(n):
                row[f"sz_{i}"] = float(self.sz[k, i])
            row["total_sz"] = float(self.total_sz[k])
            row["purity"] = float(self.purity[k])
            row["energy_rad_per_s"] = float(self.energy[k])
            out.append(row)
        return out


def evolve(rho0, model, t_grid, rtol=1e-11, atol=1e-11, include_onsite=True,
           store_states=False, with_correlators=False):
    """Integrate the master equation and record observables on ``t_grid`` (s).

    Trace and Hermiticity drifts above 1e-9 are reported in ``flags`` and
    as :class:`IntegrityWarning`; the state is never renormalised. The
    default tolerances keep the smallest eigenvalue of an evolving pure
    state above -1e-8 over ~50 exchange periods.
    """
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix(rho0)
    if rho0.n_spins != model.n_sites:
        raise DomainError(f"state has {rho0.n_spins} spins, model has {model.n_sites}")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    gen = _Generator(model, include_onsite)
    y0 = rho0.data.ravel().copy()
    if t_grid.size == 1 or t_grid[-1] == t_grid[0]:
        ys = y0[:, None]
        nfev = 0
    else:
        sol = solve_ivp(gen, (t_grid[0], t_grid[-1]), y0, method="RK45", t_eval=t_grid, rtol=rtol, atol=atol)
        if sol.status != 0:
            reached = sol.t[-1] if sol.t.size else t_grid[0]
            raise StiffnessError(f"integration stopped at t={reached:.6g} s of {t_grid[-1]:.6g} s: {sol.message}")
        ys = sol.y
        nfev = sol.nfev
    d = gen.dim
    T = t_grid.size
    res = EvolutionResult(
        times=t_grid,
        sz=np.empty((T, model.n_sites)),
        total_sz=np.empty(T),
        purity=np.empty(T),
        energy=np.empty(T),
        trace_error=np.empty(T),
        hermiticity_error=np.empty(T),
        min_eigenvalue=np.empty(T),
        correlators=np.empty((T, model.n_sites, model.n_sites), dtype=complex) if with_correlators else None,
        n_rhs=nfev,
    )
    for k in range(T):
        rho = ys[:, k].reshape(d, d)
        errs = state_errors(rho)
        res.trace_error[k] = errs["trace"]
        res.hermiticity_error[k] = errs["hermiticity"]
        res.min_eigenvalue[k] = errs["min_eigenvalue"]
        res.sz[k] = site_magnetizations(rho)
        res.total_sz[k] = res.sz[k].sum()
        res.purity[k] = purity(rho)
        res.energy[k] = energy(rho, gen.H)
        if with_correlators:
            res.correlators[k] = correlators(rho)
        if store_states:
            res.states.append(rho.copy())
    if res.trace_error.max() > TRACE_TOL:
        res.flags.append(f"trace drift {res.trace_error.max():.3g}")
    if res.hermiticity_error.max() > HERM_TOL:
        res.flags.append(f"hermiticity drift {res.hermiticity_error.max():.3g}")
    for msg in res.flags:
        warnings.warn(msg, IntegrityWarning, stacklevel=2)
    return res


def exchange_transfer_time(J):
    """First complete ``|g2 g1> -> |g1 g2>`` transfer under ``J s+_1 s-_2 + h.c.``: ``pi / (2 J)``."""
    return math.pi / (2.0 * abs(J))
