"""Gaussian Q-forms and the dense complex linear algebra behind them.

A Gaussian Q-form over ``n`` complex variables ``Z`` is the function

    Q(Z) = exp(c0 + G.Z + (G.Z)* + 1/2 Z^T X Z + (1/2 Z^T X Z)* + Z^H Y Z)

with ``X`` complex symmetric and ``Y`` Hermitian.  There is no ``1/pi``
prefactor: ``Q(Z) = <Z|rho|Z>``.  Integrals over phase space use real
coordinates ``Z_j = x_j + i y_j`` and ``d^2Z = dx dy``, stacked as
``v = (x_1, ..., x_n, y_1, ..., y_n)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonRealExponent, NotIntegrable, Singular

SYMMETRY_RTOL = 1e-12
VALIDITY_TOL = 1e-12
IMAG_TOL = 1e-9
PIVOT_RTOL = 1e-12
COND_WARN = 1e8

Partition = Tuple[Tuple[int, ...], Tuple[int, ...]]


def _as_complex_matrix(value, n: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.shape != (n, n):
        raise DimensionMismatch(f"{name} must be {n}x{n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GaussianQForm:
    """Exponent data ``(c0, gamma, X, Y)`` of a Gaussian Q-function.

    ``X`` is symmetrized and ``Y`` Hermitianized on construction; inputs whose
    asymmetry exceeds ``1e-12`` (relative) are rejected.  For Choi forms the
    optional ``partition`` records which variables belong to the input-side
    copy ``a`` and which to the output side ``b``.
    """

    n_modes: int
    c0: float
    gamma: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    partition: Optional[Partition] = field(default=None)

    def __post_init__(self):
        n = int(self.n_modes)
        if n < 1:
            raise ValueError("n_modes must be positive")
        c0 = complex(self.c0)
        if abs(c0.imag) > IMAG_TOL * max(1.0, abs(c0.real)):
            raise NonRealExponent(f"c0 must be real, got {c0}")
        gamma = np.array(self.gamma, dtype=complex).reshape(-1)
        if gamma.shape != (n,):
            raise DimensionMismatch(f"gamma must have length {n}, got {gamma.shape[0]}")
        X = _as_complex_matrix(self.X, n, "X")
        Y = _as_complex_matrix(self.Y, n, "Y")
        for name, mat, mirror in (("X", X, X.T), ("Y", Y, Y.conj().T)):
            scale = max(1.0, float(np.max(np.abs(mat))))
            if np.max(np.abs(mat - mirror)) > SYMMETRY_RTOL * scale:
                kind = "symmetric" if name == "X" else "Hermitian"
                raise ValueError(f"{name} is not {kind} within {SYMMETRY_RTOL:g}")
        X = 0.5 * (X + X.T)
        Y = 0.5 * (Y + Y.conj().T)
        partition = self.partition
        if partition is not None:
            a, b = (tuple(int(i) for i in part) for part in partition)
            if sorted(a + b) != list(range(n)):
                raise DimensionMismatch("partition must split range(n_modes) into two blocks")
            partition = (a, b)
        object.__setattr__(self, "n_modes", n)
        object.__setattr__(self, "c0", float(c0.real))
        object.__setattr__(self, "gamma", _frozen(gamma))
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "Y", _frozen(Y))
        object.__setattr__(self, "partition", partition)

    @classmethod
    def from_blocks(cls, *, c0=0.0, gamma_a, gamma_b, X_aa, X_ab, X_bb, Y_aa, Y_ab, Y_bb):
        """Assemble a Choi form over ``(Z_a, Z_b)`` from its nine parameter blocks.

        ``X_ba = X_ab^T`` and ``Y_ba = Y_ab^H`` are implied.
        """
        gamma_a = np.atleast_1d(np.asarray(gamma_a, dtype=complex))
        gamma_b = np.atleast_1d(np.asarray(gamma_b, dtype=complex))
        ka, kb = gamma_a.size, gamma_b.size
        blocks = {}
        for name, value, shape in (
            ("X_aa", X_aa, (ka, ka)),
            ("X_ab", X_ab, (ka, kb)),
            ("X_bb", X_bb, (kb, kb)),
            ("Y_aa", Y_aa, (ka, ka)),
            ("Y_ab", Y_ab, (ka, kb)),
            ("Y_bb", Y_bb, (kb, kb)),
        ):
            arr = np.asarray(value, dtype=complex)
            if arr.ndim == 0:
                arr = arr * np.ones(shape) if shape == (1, 1) else arr * np.eye(*shape)
            arr = arr.reshape(shape) if arr.size == shape[0] * shape[1] else arr
            if arr.shape != shape:
                raise DimensionMismatch(f"{name} must have shape {shape}, got {arr.shape}")
            blocks[name] = arr
        X = np.block([[blocks["X_aa"], blocks["X_ab"]], [blocks["X_ab"].T, blocks["X_bb"]]])
        Y = np.block([[blocks["Y_aa"], blocks["Y_ab"]], [blocks["Y_ab"].conj().T, blocks["Y_bb"]]])
        partition = (tuple(range(ka)), tuple(range(ka, ka + kb)))
        return cls(ka + kb, c0, np.concatenate([gamma_a, gamma_b]), X, Y, partition)

    # -- block access for Choi forms ------------------------------------

    def _split(self):
        if self.partition is None:
            raise ValueError("form has no (a, b) partition")
        return np.array(self.partition[0], dtype=int), np.array(self.partition[1], dtype=int)

    def blocks(self) -> dict:
        """Return the nine Choi parameter blocks keyed by name."""
        a, b = self._split()
        return {
            "c0": self.c0,
            "gamma_a": self.gamma[a].copy(),
            "gamma_b": self.gamma[b].copy(),
            "X_aa": self.X[np.ix_(a, a)].copy(),
            "X_ab": self.X[np.ix_(a, b)].copy(),
            "X_bb": self.X[np.ix_(b, b)].copy(),
            "Y_aa": self.Y[np.ix_(a, a)].copy(),
            "Y_ab": self.Y[np.ix_(a, b)].copy(),
            "Y_bb": self.Y[np.ix_(b, b)].copy(),
        }

    def with_c0(self, c0: float) -> "GaussianQForm":
        return GaussianQForm(self.n_modes, c0, self.gamma, self.X, self.Y, self.partition)

    # -- real-coordinate picture -----------------------------------------

    def real_quadratic(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(Q, b)`` with exponent ``= v^T Q v + b^T v + c0`` in real coordinates."""
        n = self.n_modes
        T = np.hstack([np.eye(n), 1j * np.eye(n)])
        Q = (T.T @ self.X @ T).real + (T.conj().T @ self.Y @ T).real
        Q = 0.5 * (Q + Q.T)
        gT = self.gamma @ T
        return Q, 2.0 * gT.real

    @property
    def is_valid(self) -> bool:
        """True when the real quadratic form is negative definite (integrable Q)."""
        Q, _ = self.real_quadratic()
        return bool(np.all(np.linalg.eigvalsh(Q) < -VALIDITY_TOL))

    def __repr__(self):
        part = "" if self.partition is None else f", partition={self.partition}"
        return f"GaussianQForm(n_modes={self.n_modes}, c0={self.c0:.6g}{part})"


def exponent(form: GaussianQForm, Z) -> complex:
    """Complex value of the Q-form exponent at ``Z`` (imaginary part ~ 0)."""
    Z = np.atleast_1d(np.asarray(Z, dtype=complex))
    if Z.shape != (form.n_modes,):
        raise DimensionMismatch(f"Z must have length {form.n_modes}, got {Z.shape[0]}")
    L = form.gamma @ Z
    S = 0.5 * Z @ form.X @ Z
    S0 = Z.conj() @ form.Y @ Z
    return form.c0 + L + np.conj(L) + S + np.conj(S) + S0


def evaluate_q(form: GaussianQForm, Z) -> float:
    """Evaluate ``Q(Z)`` for a single point ``Z`` of length ``n_modes``."""
    e = exponent(form, Z)
    if abs(e.imag) > IMAG_TOL * max(1.0, abs(e.real)):
        raise NonRealExponent(f"exponent has imaginary part {e.imag:.3g}")
    return float(np.exp(e.real))


def evaluate_q_grid(form: GaussianQForm, points) -> np.ndarray:
    """Vectorised ``evaluate_q`` over an array of points with trailing axis ``n_modes``."""
    pts = np.asarray(points, dtype=complex)
    if form.n_modes == 1 and (pts.ndim == 0 or pts.shape[-1:] != (1,)):
        pts = pts[..., None]
    if pts.shape[-1] != form.n_modes:
        raise DimensionMismatch(f"points must have trailing axis {form.n_modes}")
    L = pts @ form.gamma
    S = 0.5 * np.einsum("...i,ij,...j->...", pts, form.X, pts)
    S0 = np.einsum("...i,ij,...j->...", pts.conj(), form.Y, pts)
    e = form.c0 + 2 * L.real + 2 * S.real + S0
    if np.any(np.abs(e.imag) > IMAG_TOL * np.maximum(1.0, np.abs(e.real))):
        raise NonRealExponent("exponent has a non-negligible imaginary part")
    return np.exp(e.real)


def _negated_cholesky(form: GaussianQForm):
    Q, b = form.real_quadratic()
    A = -Q
    if not np.all(np.linalg.eigvalsh(A) > VALIDITY_TOL):
        raise NotIntegrable("quadratic part is not negative definite")
    return scipy.linalg.cho_factor(A, lower=True), b


def log_gaussian_integral(form: GaussianQForm) -> float:
    """Natural log of :func:`gaussian_integral`."""
    cho, b = _negated_cholesky(form)
    logdet = 2.0 * np.sum(np.log(np.diag(cho[0])))
    quad = 0.25 * b @ scipy.linalg.cho_solve(cho, b)
    return form.c0 + quad - 0.5 * logdet


def gaussian_integral(form: GaussianQForm) -> float:
    """Trace of the represented operator, ``pi^-n * integral of Q(Z) d^2Z``.

    Uses the closed form ``det(A)^(-1/2) exp(c0 + b^T A^-1 b / 4)`` where the
    exponent reads ``-v^T A v + b^T v + c0`` in real coordinates.

    Raises:
        NotIntegrable: if the quadratic part is not negative definite.
    """
    return float(np.exp(log_gaussian_integral(form)))


def normalize(form: GaussianQForm) -> GaussianQForm:
    """Copy of ``form`` with ``c0`` shifted so that its trace is one."""
    return form.with_c0(form.c0 - log_gaussian_integral(form))


def peak(form: GaussianQForm) -> np.ndarray:
    """Location of the maximum of a valid Q-form."""
    cho, b = _negated_cholesky(form)
    v = 0.5 * scipy.linalg.cho_solve(cho, b)
    n = form.n_modes
    return v[:n] + 1j * v[n:]


def log_complex_gaussian_integral(A: np.ndarray, b: np.ndarray, c: complex = 0.0) -> complex:
    """Log of ``integral exp(-v^T A v + b^T v + c) dv`` over ``R^m`` for complex symmetric ``A``.

    Requires ``Re A`` positive definite.  The square root of the determinant is
    taken eigenvalue by eigenvalue on the principal branch, which is the analytic
    continuation from real ``A`` (all eigenvalues lie in the right half plane).
    """
    A = np.asarray(A, dtype=complex)
    A = 0.5 * (A + A.T)
    m = A.shape[0]
    if not np.all(np.linalg.eigvalsh(A.real) > VALIDITY_TOL):
        raise NotIntegrable("real part of the quadratic form is not positive definite")
    eig = np.linalg.eigvals(A)
    log_sqrt_det = 0.5 * np.sum(np.log(eig))
    quad = 0.25 * b @ np.linalg.solve(A, b)
    return 0.5 * m * np.log(np.pi) - log_sqrt_det + quad + c


# -- linear solves ----------------------------------------------------------


class LinearSolution(NamedTuple):
    solution: np.ndarray
    residual: float
    cond: float
    ill_conditioned: bool


def normalized_det(M: np.ndarray) -> float:
    """Scale-free determinant ``sqrt|det(M^H M)| / prod_j ||M[:, j]||``, in ``[0, 1]``.

    Equals ``|det M|`` over the product of column norms for square ``M``.
    """
    M = np.asarray(M, dtype=complex)
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms == 0):
        return 0.0
    G = M.conj().T @ M if M.shape[0] != M.shape[1] else M
    sign, logdet = np.linalg.slogdet(G)
    if sign == 0:
        return 0.0
    if M.shape[0] != M.shape[1]:
        logdet *= 0.5
    return float(np.exp(logdet - np.sum(np.log(norms))))


def solve_linear(M, rhs) -> LinearSolution:
    """Solve ``M x = rhs`` (square) or its least-squares problem (tall).

    ``rhs`` may be a vector or a matrix of right-hand-side columns.  Square
    systems use LU with partial pivoting, tall ones a column-pivoted QR.  The
    returned ``cond`` is the 2-norm condition number of ``M``.

    Raises:
        Singular: if a pivot falls below ``1e-12 * max|M_ij|``.
    """
    M = np.asarray(M, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    if M.ndim != 2 or M.shape[0] < M.shape[1]:
        raise DimensionMismatch(f"M must be square or tall, got shape {M.shape}")
    if rhs.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"rhs has {rhs.shape[0]} rows, M has {M.shape[0]}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(rhs))):
        raise ValueError("non-finite entries in linear system")
    threshold = PIVOT_RTOL * np.max(np.abs(M))
    if M.shape[0] == M.shape[1]:
        with warnings.catch_warnings():
            # exact zero pivots are reported through Singular below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        if np.min(np.abs(np.diag(lu))) <= threshold:
            raise Singular("matrix is singular to working precision")
        x = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    else:
        q, r, perm = scipy.linalg.qr(M, mode="economic", pivoting=True, check_finite=False)
        if np.min(np.abs(np.diag(r))) <= threshold:
            raise Singular("matrix is rank deficient to working precision")
        y = scipy.linalg.solve_triangular(r, q.conj().T @ rhs, check_finite=False)
        x = np.empty_like(y)
        x[perm] = y
    residual = float(np.linalg.norm(M @ x - rhs))
    cond = float(np.linalg.cond(M))
    return LinearSolution(x, residual, cond, cond > COND_WARN)


# -- JSON -----------------------------------------------------------------


def encode_complex(value):
    """Nested lists of ``[re, im]`` pairs for a complex scalar or array."""
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [encode_complex(v) for v in arr]


def decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ValueError("complex numbers must be encoded as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def form_to_dict(form: GaussianQForm) -> dict:
    return {
        "n_modes": form.n_modes,
        "partition": None if form.partition is None else [list(p) for p in form.partition],
        "c0": form.c0,
        "gamma": encode_complex(form.gamma),
        "X": encode_complex(form.X),
        "Y": encode_complex(form.Y),
    }


def form_from_dict(data: dict) -> GaussianQForm:
    n = int(data["n_modes"])
    part = data.get("partition")
    return GaussianQForm(
        n,
        float(data["c0"]),
        decode_complex(data["gamma"]).reshape(n),
        decode_complex(data["X"]).reshape(n, n),
        decode_complex(data["Y"]).reshape(n, n),
        None if part is None else (tuple(part[0]), tuple(part[1])),
    )


def forms_close(f: GaussianQForm, g: GaussianQForm, atol: float) -> bool:
    return (
        f.n_modes == g.n_modes
        and abs(f.c0 - g.c0) <= atol
        and np.allclose(f.gamma, g.gamma, rtol=0, atol=atol)
        and np.allclose(f.X, g.X, rtol=0, atol=atol)
        and np.allclose(f.Y, g.Y, rtol=0, atol=atol)
    )


def coherent_form(alpha: Sequence[complex] | complex) -> GaussianQForm:
    """Normalized Q-form of the coherent state ``|alpha>``: ``exp(-|Z - alpha|^2)``."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    n = alpha.size
    return GaussianQForm(n, -float(np.vdot(alpha, alpha).real), alpha.conj(), np.zeros((n, n)), -np.eye(n))
