"""Truncated Fock-space oracle.

Everything here is brute-force matrix algebra in the photon-number basis and
serves as an independent check on the phase-space formulas.  A cutoff ``N``
keeps Fock states ``|0>, ..., |N>`` (dimension ``N + 1``).  Bipartite
operators are ordered with the a-mode index major and the b-mode index minor,
``|a, b> -> a * dim_b + b``.  The maximally entangled vector is the
*unnormalized* ``sum_k |k, k>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, lgamma, log
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import AmplificationOverflow, CutoffTooSmall, DimensionMismatch, DomainError, ZeroWeight
from .qform import decode_complex, encode_complex

TAIL_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = -1e-10
EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator on a product of truncated Fock spaces."""

    matrix: np.ndarray
    dims: Tuple[int, ...]
    kind: str = "density"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        size = int(np.prod(dims))
        if m.shape != (size, size):
            raise DimensionMismatch(f"matrix shape {m.shape} does not match dims {dims}")
        if self.kind not in ("density", "kraus", "diagonal-map"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind == "density":
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
                raise ValueError("density operator is not Hermitian")
            m = 0.5 * (m + m.conj().T)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def modes(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.dims[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return bool(np.min(np.linalg.eigvalsh(self.matrix)) >= tol * max(1.0, abs(self.trace())))

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "modes": self.modes, "kind": self.kind, "entries": encode_complex(self.matrix)}

    @classmethod
    def from_dict(cls, data: dict) -> "FockOperator":
        return cls(decode_complex(data["entries"]), tuple(data["dims"]), data.get("kind", "density"))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel ``rho -> sum_i K_i rho K_i^dag`` on one truncated mode."""

    kraus: List[np.ndarray]
    label: str = ""
    interior: int = field(default=None)

    def __post_init__(self):
        ops = [np.asarray(K, dtype=complex) for K in self.kraus]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(K.shape != shape for K in ops):
            raise DimensionMismatch("Kraus operators must share one shape")
        object.__setattr__(self, "kraus", ops)
        if self.interior is None:
            object.__setattr__(self, "interior", _complete_block(ops))

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def then(self, other: "KrausChannel", prune: float = 1e-15) -> "KrausChannel":
        """Channel that applies ``self`` first and ``other`` second."""
        ops = [B @ A for B in other.kraus for A in self.kraus]
        ops = [K for K in ops if np.linalg.norm(K) > prune]
        label = f"{other.label} . {self.label}"
        return KrausChannel(ops, label, min(self.interior, other.interior))

    def completeness_defect(self, interior: int = None) -> float:
        """Max deviation of ``sum K^dag K`` from the identity on the leading block."""
        n = self.interior if interior is None else interior
        S = sum(K.conj().T @ K for K in self.kraus)
        return float(np.max(np.abs(S[:n, :n] - np.eye(n))))


def _mat(op) -> np.ndarray:
    return op.matrix if isinstance(op, FockOperator) else np.asarray(op, dtype=complex)


# -- states --------------------------------------------------------------------


def _log_factorial(n: int) -> float:
    return lgamma(n + 1)


def coherent_vector(alpha: complex, cutoff: int, tol: float = TAIL_TOL) -> np.ndarray:
    """Fock amplitudes ``exp(-|alpha|^2/2) alpha^n / sqrt(n!)`` for ``n <= cutoff``.

    Raises:
        CutoffTooSmall: if the amplitude on ``|cutoff>`` is ``>= tol``.
    """
    alpha = complex(alpha)
    log_edge = cutoff * log(abs(alpha)) - 0.5 * _log_factorial(cutoff) - 0.5 * abs(alpha) ** 2 if alpha else -np.inf
    if cutoff > 0 and np.isfinite(tol) and log_edge >= log(tol):
        raise CutoffTooSmall(f"cutoff {cutoff} too small for |alpha| = {abs(alpha):.3g}")
    v = np.empty(cutoff + 1, complex)
    v[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff + 1):
        v[n] = v[n - 1] * alpha / np.sqrt(n)
    return v


def multimode_coherent_vector(alphas: Sequence[complex], cutoff: int) -> np.ndarray:
    v = np.ones(1, complex)
    for a in alphas:
        v = np.kron(v, coherent_vector(a, cutoff))
    return v


def fock_vector(coeffs: Sequence[complex], cutoff: int) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.size > cutoff + 1:
        raise CutoffTooSmall(f"{coeffs.size} coefficients exceed cutoff {cutoff}")
    v = np.zeros(cutoff + 1, complex)
    v[: coeffs.size] = coeffs
    return v


def _check_q(q: float):
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")


def tmss_vector(q: float, cutoff: int, tol: float = TAIL_TOL) -> np.ndarray:
    """``c_q sum_k q^k |k, k>`` truncated at ``cutoff`` (a-major ordering).

    Raises:
        CutoffTooSmall: if the discarded norm ``q^(2(cutoff+1))`` exceeds ``tol``.
    """
    _check_q(q)
    if 2 * (cutoff + 1) * log(q) >= log(tol):
        raise CutoffTooSmall(f"cutoff {cutoff} leaves norm {q ** (2 * (cutoff + 1)):.2e} for q={q}")
    dim = cutoff + 1
    v = np.zeros(dim * dim, complex)
    k = np.arange(dim)
    v[k * dim + k] = np.sqrt(1 - q**2) * q**k
    return v


def phi_plus(dim: int) -> np.ndarray:
    """Unnormalized ``sum_k |k, k>`` on ``dim`` levels."""
    v = np.zeros(dim * dim, complex)
    k = np.arange(dim)
    v[k * dim + k] = 1.0
    return v


def ket_to_dm(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def density(v, dims) -> FockOperator:
    return FockOperator(ket_to_dm(v), tuple(dims))


def thermal_state(nbar: float, cutoff: int) -> FockOperator:
    n = np.arange(cutoff + 1)
    p = nbar**n / (1 + nbar) ** (n + 1)
    return FockOperator(np.diag(p).astype(complex), (cutoff + 1,))


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def _complete_block(ops, tol: float = 1e-8) -> int:
    """Size of the largest leading block on which ``sum K^dag K`` is the identity."""
    S = sum(K.conj().T @ K for K in ops)
    n = S.shape[0]
    for m in range(1, n + 1):
        if np.max(np.abs(S[:m, :m] - np.eye(m))) >= tol:
            return m - 1
    return n


def displacement_operator(delta: complex, cutoff: int, pad: int = 40) -> np.ndarray:
    """``D(delta)`` exponentiated in a padded space and cropped to ``cutoff``."""
    big = cutoff + 1 + pad
    a = annihilation(big)
    D = scipy.linalg.expm(delta * a.conj().T - np.conj(delta) * a)
    return D[: cutoff + 1, : cutoff + 1]


def squeeze_operator(r: float, cutoff: int, pad: int = 40) -> np.ndarray:
    """``exp(-r/2 a^dag^2 + r/2 a^2)`` in a padded space, cropped to ``cutoff``."""
    big = cutoff + 1 + pad
    a = annihilation(big)
    S = scipy.linalg.expm(-0.5 * r * a.conj().T @ a.conj().T + 0.5 * r * a @ a)
    return S[: cutoff + 1, : cutoff + 1]


def displaced_squeezed_vector(r: float, Z: complex, cutoff: int, pad: int = 40) -> np.ndarray:
    """Fock amplitudes of ``S(r) D(Z)|0>``, built in a padded space then cropped."""
    big = cutoff + 1 + pad
    a = annihilation(big)
    D = scipy.linalg.expm(Z * a.conj().T - np.conj(Z) * a)
    S = scipy.linalg.expm(-0.5 * r * a.conj().T @ a.conj().T + 0.5 * r * a @ a)
    vac = np.zeros(big, complex)
    vac[0] = 1.0
    return (S @ (D @ vac))[: cutoff + 1]


# -- filtering operators ---------------------------------------------------------


def t_operator_finite(r: Sequence[float]) -> FockOperator:
    r = np.asarray(r, dtype=complex)
    if np.any(r == 0):
        raise ZeroWeight("every filter weight r_k must be non-zero")
    return FockOperator(np.diag(r), (r.size,), "diagonal-map")


def t_operator(q: float, cutoff: int) -> FockOperator:
    """``T(q) = c_q q^(a^dag a)`` on ``cutoff + 1`` levels."""
    _check_q(q)
    return t_operator_finite(np.sqrt(1 - q**2) * q ** np.arange(cutoff + 1))


def inverse_diagonal(T: FockOperator) -> FockOperator:
    diag = np.diag(T.matrix)
    if np.any(diag == 0):
        raise ZeroWeight("cannot invert a filter with a zero weight")
    return FockOperator(np.diag(1 / diag), T.dims, "diagonal-map")


def _filter_a(op: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``(W (x) I) op (W (x) I)`` for a real diagonal ``W`` acting on the a-factor."""
    da = weights.size
    db = op.shape[0] // da
    w = np.repeat(weights, db)
    return op * np.outer(w, w.conj())


# -- channel application ---------------------------------------------------------


def apply_channel(ch: KrausChannel, rho) -> FockOperator:
    r = _mat(rho)
    if r.shape != (ch.dim_in, ch.dim_in):
        raise DimensionMismatch(f"state dimension {r.shape[0]} != channel input {ch.dim_in}")
    out = np.zeros((ch.dim_out, ch.dim_out), complex)
    for K in ch.kraus:
        out += K @ r @ K.conj().T
    return FockOperator(out, (ch.dim_out,))


def one_sided_apply(ch: KrausChannel, rho, dim_a: int = None) -> FockOperator:
    """``(I (x) channel)`` on a bipartite operator whose b-factor matches the channel input."""
    r = _mat(rho)
    db = ch.dim_in
    da = dim_a if dim_a is not None else r.shape[0] // db
    if r.shape != (da * db, da * db):
        raise DimensionMismatch(f"operator of size {r.shape[0]} is not {da}x{db}")
    R = r.reshape(da, db, da, db)
    dout = ch.dim_out
    out = np.zeros((da, dout, da, dout), complex)
    moved = R.transpose(1, 0, 2, 3).reshape(db, -1)
    for K in ch.kraus:
        tmp = (K @ moved).reshape(dout, da, da, db).transpose(1, 0, 2, 3)
        out += tmp @ K.conj().T
    return FockOperator(out.reshape(da * dout, da * dout), (da, dout))


def one_sided_apply_ket(ch: KrausChannel, psi, dim_a: int = None) -> FockOperator:
    """``(I (x) channel)(|psi><psi|)`` for a bipartite pure state, as ``W W^H``."""
    psi = np.asarray(psi, dtype=complex)
    db = ch.dim_in
    da = dim_a if dim_a is not None else psi.size // db
    if psi.size != da * db:
        raise DimensionMismatch(f"vector of length {psi.size} is not {da}x{db}")
    P = psi.reshape(da, db)
    W = np.stack([(P @ K.T).reshape(-1) for K in ch.kraus], axis=1)
    return FockOperator(W @ W.conj().T, (da, ch.dim_out))


def choi_from_channel(ch: KrausChannel, cutoff: int = None) -> FockOperator:
    """``(I (x) channel)(|Phi+><Phi+|)`` with the unnormalized ``|Phi+>``."""
    din = ch.dim_in if cutoff is None else cutoff + 1
    if din != ch.dim_in:
        raise DimensionMismatch(f"cutoff {cutoff} does not match channel input dimension {ch.dim_in}")
    out = np.zeros((din * ch.dim_out, din * ch.dim_out), complex)
    for K in ch.kraus:
        v = K.T.reshape(-1)
        out += np.outer(v, v.conj())
    return FockOperator(out, (din, ch.dim_out))


def partial_inner(op, psi_a) -> np.ndarray:
    """``<psi_a| op |psi_a>`` over the a-factor of a bipartite operator."""
    r = _mat(op)
    psi_a = np.asarray(psi_a, dtype=complex)
    da = psi_a.size
    db = r.shape[0] // da
    if r.shape != (da * db, da * db):
        raise DimensionMismatch(f"vector of length {da} does not divide operator size {r.shape[0]}")
    R = r.reshape(da, db, da, db)
    return np.einsum("a,abcd,c->bd", psi_a.conj(), R, psi_a)


def predict_from_choi(choi, psi) -> FockOperator:
    """Channel output for pure input ``psi``: ``<psi*| choi |psi*>`` over the a-factor."""
    psi = np.asarray(psi, dtype=complex)
    return FockOperator(partial_inner(choi, psi.conj()), (_mat(choi).shape[0] // psi.size,))


def amplification(q: float, cutoff: int) -> float:
    """Largest entry of ``T^-1(q)`` on ``cutoff + 1`` levels."""
    return 1.0 / (np.sqrt(1 - q**2) * q**cutoff)


def tmss_reconstruct(omega_q, q: float, tol: float = 1e-6, noise: float = EPS**2) -> FockOperator:
    """Choi operator from the channel's response to a TMSS.

    Args:
        omega_q: bipartite output of ``(I (x) channel)`` on ``|chi(q)><chi(q)|``.
        q: TMSS parameter.
        tol: accuracy required of the reconstruction.
        noise: absolute error assumed on the entries of ``omega_q``.  The
            default is the rounding floor of a product of two double-precision
            amplitudes, appropriate for simulated inputs.

    Raises:
        AmplificationOverflow: when ``amplification(q, cutoff) * noise > tol``.
    """
    _check_q(q)
    op = omega_q if isinstance(omega_q, FockOperator) else None
    r = _mat(omega_q)
    da = op.dims[0] if op is not None else int(round(np.sqrt(r.shape[0])))
    cutoff = da - 1
    amp = amplification(q, cutoff)
    if amp * noise > tol:
        raise AmplificationOverflow(
            f"T^-1(q={q}) amplifies by {amp:.2e} at cutoff {cutoff}; "
            f"error {amp * noise:.2e} exceeds tolerance {tol:.1e}"
        )
    weights = 1.0 / (np.sqrt(1 - q**2) * q ** np.arange(da))
    dims = op.dims if op is not None else (da, r.shape[0] // da)
    return FockOperator(_filter_a(r, weights), dims)


def tmss_predict(omega_q, q: float, psi) -> FockOperator:
    """Output state for input ``psi`` read directly off the TMSS response."""
    _check_q(q)
    psi = np.asarray(psi, dtype=complex)
    weights = np.sqrt(1 - q**2) * q ** np.arange(psi.size)
    return qudit_predict(omega_q, weights, psi)


def qudit_forward(ch: KrausChannel, r: Sequence[complex]) -> FockOperator:
    """``(I (x) channel)(|phi(r)><phi(r)|)`` with ``|phi(r)> = sum_k r_k |k, k>``."""
    r = np.asarray(r, dtype=complex)
    if r.size != ch.dim_in:
        raise DimensionMismatch("weights must match the channel input dimension")
    phi = np.zeros(r.size * r.size, complex)
    k = np.arange(r.size)
    phi[k * r.size + k] = r
    return one_sided_apply(ch, ket_to_dm(phi), r.size)


def qudit_reconstruct(omega_r, r: Sequence[complex]) -> FockOperator:
    """Invert the diagonal filter on the a-factor: ``(T^-1 (x) I) omega (T^-1 (x) I)``."""
    r = np.asarray(r, dtype=complex)
    if np.any(r == 0):
        raise ZeroWeight("every filter weight r_k must be non-zero")
    m = _mat(omega_r)
    if m.shape[0] % r.size:
        raise DimensionMismatch("weights do not divide the operator dimension")
    return FockOperator(_filter_a(m, 1 / r), (r.size, m.shape[0] // r.size))


def qudit_predict(omega_r, r: Sequence[complex], c: Sequence[complex]) -> FockOperator:
    """Output for input ``sum_k c_k |k>``: ``<v| omega |v>_a`` with ``v_k = c_k* / r_k``."""
    r = np.asarray(r, dtype=complex)
    c = np.asarray(c, dtype=complex)
    if np.any(r == 0):
        raise ZeroWeight("every filter weight r_k must be non-zero")
    if c.size != r.size:
        raise DimensionMismatch("input coefficients must match the filter length")
    v = c.conj() / r.conj()
    m = _mat(omega_r)
    return FockOperator(partial_inner(m, v), (m.shape[0] // r.size,))


def q_eval(rho, Z) -> float:
    """Husimi value ``<Z|rho|Z>`` (no ``1/pi``) of a single- or multi-mode operator."""
    if isinstance(rho, FockOperator):
        m, dims = rho.matrix, rho.dims
    else:
        m = np.asarray(rho, dtype=complex)
        dims = (m.shape[0],)
    Z = np.atleast_1d(np.asarray(Z, dtype=complex))
    if Z.size != len(dims):
        raise DimensionMismatch(f"Z has {Z.size} components, operator has {len(dims)} modes")
    # the operator lives in the truncated space, so truncating <Z| is exact
    v = np.ones(1, complex)
    for z, d in zip(Z, dims):
        v = np.kron(v, coherent_vector(z, d - 1, tol=np.inf))
    return float(np.real(v.conj() @ m @ v))


# -- built-in channels -------------------------------------------------------------


def identity_kraus(cutoff: int) -> KrausChannel:
    return KrausChannel([np.eye(cutoff + 1)], "identity")


def phase_kraus(phi: float, cutoff: int) -> KrausChannel:
    return KrausChannel([np.diag(np.exp(1j * phi * np.arange(cutoff + 1)))], f"phase({phi})")


def loss_kraus(t: complex, cutoff: int) -> KrausChannel:
    """Beam splitter with vacuum ancilla: ``|alpha> -> |t alpha>`` for ``|t| <= 1``.

    ``K_l |n> = sqrt(C(n, l)) t^(n-l) sqrt(1-|t|^2)^l |n - l>``; exact under truncation.
    """
    t = complex(t)
    if abs(t) > 1 + 1e-15:
        raise DomainError("loss amplitude must satisfy |t| <= 1")
    s = np.sqrt(max(0.0, 1 - abs(t) ** 2))
    dim = cutoff + 1
    ops = []
    for l in range(dim):
        if l > 0 and s == 0:
            break
        K = np.zeros((dim, dim), complex)
        for n in range(l, dim):
            K[n - l, n] = np.sqrt(comb(n, l)) * t ** (n - l) * s**l
        ops.append(K)
    return KrausChannel(ops, f"loss(t={t})")


def amplifier_kraus(gain: float, cutoff: int) -> KrausChannel:
    """Quantum-limited amplifier: ``B_k |n> = sqrt(C(n+k, k)) G^(-(n+1)/2) ((G-1)/G)^(k/2) |n + k>``.

    Probability pushed above the cutoff is lost, so completeness only holds on
    a leading block; ``interior`` records the largest such block (defect < 1e-8).
    """
    if gain < 1:
        raise DomainError("gain must be >= 1")
    dim = cutoff + 1
    if gain == 1:
        return identity_kraus(cutoff)
    x = (gain - 1) / gain
    ops = []
    for k in range(dim):
        K = np.zeros((dim, dim), complex)
        for n in range(dim - k):
            logv = 0.5 * (lgamma(n + k + 1) - lgamma(n + 1) - lgamma(k + 1))
            logv += -0.5 * (n + 1) * log(gain) + 0.5 * k * log(x)
            K[n + k, n] = np.exp(logv)
        ops.append(K)
    S = np.real(np.diag(sum(K.conj().T @ K for K in ops)))
    interior = int(np.argmax(np.abs(S - 1) > 1e-8)) if np.any(np.abs(S - 1) > 1e-8) else dim
    return KrausChannel(ops, f"amplifier(G={gain})", interior)


def displacement_kraus(delta: complex, cutoff: int) -> KrausChannel:
    return KrausChannel([displacement_operator(delta, cutoff)], f"displace({delta})")


def gaussian_kraus(t: complex = 1.0, nbar: float = 0.0, delta: complex = 0.0, cutoff: int = 40) -> KrausChannel:
    """Oracle counterpart of the single-mode analytic Gaussian channel.

    Realized as loss with amplitude ``t / sqrt(1 + nbar)``, then a quantum-limited
    amplifier of gain ``1 + nbar``, then a displacement by ``delta``.
    """
    gain = 1.0 + nbar
    ch = loss_kraus(t / np.sqrt(gain), cutoff)
    if nbar > 0:
        ch = ch.then(amplifier_kraus(gain, cutoff))
    if delta != 0:
        ch = ch.then(displacement_kraus(delta, cutoff))
    return ch


def random_kraus_channel(dim: int, n_kraus: int, seed: int) -> KrausChannel:
    """Random CPTP map: Gaussian complex matrices rescaled by ``(sum K^dag K)^(-1/2)``."""
    rng = np.random.default_rng(seed)
    ops = [rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(n_kraus)]
    S = sum(K.conj().T @ K for K in ops)
    w, V = np.linalg.eigh(S)
    inv_sqrt = V @ np.diag(w**-0.5) @ V.conj().T
    return KrausChannel([K @ inv_sqrt for K in ops], f"random(dim={dim}, seed={seed})")


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# -- distances -------------------------------------------------------------------------


PURE_TOL = 1e-12


def trace_distance(rho, sigma) -> float:
    diff = _mat(rho) - _mat(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    a, b = _mat(rho), _mat(sigma)
    for p, other in ((a, b), (b, a)):
        w, V = np.linalg.eigh(0.5 * (p + p.conj().T))
        if w[-1] > (1 - PURE_TOL) * np.sum(np.abs(w)):
            # pure argument: exact overlap, avoids square roots of roundoff
            v = V[:, -1] * np.sqrt(w[-1])
            return float(np.real(v.conj() @ other @ v))
    w, V = np.linalg.eigh(0.5 * (a + a.conj().T))
    sa = V @ np.diag(np.sqrt(np.clip(w, 0, None))) @ V.conj().T
    m = sa @ b @ sa
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0, None))) ** 2)
