"""Gaussian channels represented by the Q-form of their Choi state.

The Choi state of a ``k``-mode channel lives on ``2k`` variables: an
input-side copy ``Z_a`` and the output ``Z_b``.  Feeding a coherent probe
``|alpha>`` amounts to substituting ``Z_a* -> alpha`` and ``Z_a -> alpha*``,
which leaves a ``k``-mode Gaussian Q-form for the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, DomainError
from .qform import (
    GaussianQForm,
    decode_complex,
    encode_complex,
    form_from_dict,
    form_to_dict,
    log_complex_gaussian_integral,
    normalize,
)


@dataclass(frozen=True)
class GaussianChannelSpec:
    k: int
    choi: GaussianQForm
    label: str = ""

    def __post_init__(self):
        expected = (tuple(range(self.k)), tuple(range(self.k, 2 * self.k)))
        if self.choi.n_modes != 2 * self.k or self.choi.partition != expected:
            raise DimensionMismatch(f"choi form must span 2k={2 * self.k} modes partitioned (a, b)")


@dataclass(frozen=True, eq=False)
class ProbeRecord:
    """Linear and constant exponent data measured for one coherent probe."""

    alpha: np.ndarray
    d: np.ndarray
    c: float
    Xbb: np.ndarray
    Ybb: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        k = alpha.size
        d = np.atleast_1d(np.asarray(self.d, dtype=complex))
        Xbb = np.asarray(self.Xbb, dtype=complex).reshape(k, k)
        Ybb = np.asarray(self.Ybb, dtype=complex).reshape(k, k)
        if d.shape != (k,):
            raise DimensionMismatch(f"d must have length {k}")
        for arr in (alpha, d, Xbb, Ybb):
            if not np.all(np.isfinite(arr)):
                raise ValueError("probe record has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(Xbb))), float(np.max(np.abs(Ybb))))
        if np.max(np.abs(Xbb - Xbb.T)) > 1e-12 * scale:
            raise ValueError("Xbb is not symmetric")
        if np.max(np.abs(Ybb - Ybb.conj().T)) > 1e-12 * scale:
            raise ValueError("Ybb is not Hermitian")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "Xbb", Xbb)
        object.__setattr__(self, "Ybb", Ybb)

    @property
    def k(self) -> int:
        return self.alpha.size

    def output_form(self) -> GaussianQForm:
        return GaussianQForm(self.k, self.c, self.d, self.Xbb, self.Ybb)

    def to_dict(self) -> dict:
        return {
            "alpha": encode_complex(self.alpha),
            "d": encode_complex(self.d),
            "c": self.c,
            "Xbb": encode_complex(self.Xbb),
            "Ybb": encode_complex(self.Ybb),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProbeRecord":
        return cls(
            decode_complex(data["alpha"]),
            decode_complex(data["d"]),
            float(data["c"]),
            decode_complex(data["Xbb"]),
            decode_complex(data["Ybb"]),
        )


# -- constructors -------------------------------------------------------------


def gaussian_channel(T, nbar: float = 0.0, delta=None, label: str = "") -> GaussianChannelSpec:
    """Attenuating linear channel ``alpha -> T alpha + delta`` with isotropic added noise.

    A coherent input ``|alpha>`` leaves as a displaced thermal state with mean
    ``T alpha + delta`` and ``nbar`` noise photons per mode, i.e.
    ``Q(Z) = (1 + nbar)^-k exp(-|Z - T alpha - delta|^2 / (1 + nbar))``.
    Physical whenever ``||T|| <= 1``.
    """
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    k = T.shape[0]
    if T.shape != (k, k):
        raise DimensionMismatch("T must be square")
    if nbar < 0:
        raise DomainError("nbar must be non-negative")
    delta = np.zeros(k, complex) if delta is None else np.atleast_1d(np.asarray(delta, dtype=complex))
    w = 1.0 / (1.0 + nbar)
    TH = T.conj().T
    choi = GaussianQForm.from_blocks(
        c0=-k * np.log1p(nbar) - w * float(np.vdot(delta, delta).real),
        gamma_a=-w * (TH @ delta),
        gamma_b=w * delta.conj(),
        X_aa=np.zeros((k, k)),
        X_ab=w * TH,
        X_bb=np.zeros((k, k)),
        Y_aa=-w * (TH @ T).conj(),
        Y_ab=np.zeros((k, k)),
        Y_bb=-w * np.eye(k),
    )
    return GaussianChannelSpec(k, choi, label)


def identity_channel(k: int = 1) -> GaussianChannelSpec:
    if k < 1:
        raise DomainError("k must be at least 1")
    return gaussian_channel(np.eye(k), label=f"identity(k={k})")


def bs_channel(theta: float) -> GaussianChannelSpec:
    """Beam splitter with a vacuum ancilla, ancilla output traced out."""
    return gaussian_channel(np.cos(theta), label=f"bs(theta={theta!r})")


def thermal_noise_channel(nbar: float) -> GaussianChannelSpec:
    if nbar < 0:
        raise DomainError("nbar must be non-negative")
    return gaussian_channel(1.0, nbar=nbar, label=f"thermal(nbar={nbar!r})")


def phase_channel(phi: float) -> GaussianChannelSpec:
    return gaussian_channel(np.exp(1j * phi), label=f"phase(phi={phi!r})")


def random_gaussian_channel(k: int, seed: int, scale: float = 0.5, margin: float = 0.2) -> GaussianChannelSpec:
    """Random Choi form with every block populated and an integrable quadratic part.

    Blocks are drawn from a seeded normal distribution; ``Y`` is then shifted by
    a multiple of the identity until the real quadratic form has all
    eigenvalues below ``-margin``.  The map is not guaranteed to be completely
    positive; it exercises the algebra of tomography, not its physics.
    """
    rng = np.random.default_rng(seed)

    def cplx(*shape):
        return scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape))

    X = cplx(2 * k, 2 * k)
    Y = cplx(2 * k, 2 * k)
    form = GaussianQForm(
        2 * k,
        float(scale * rng.normal()),
        cplx(2 * k),
        0.5 * (X + X.T),
        0.5 * (Y + Y.conj().T),
        (tuple(range(k)), tuple(range(k, 2 * k))),
    )
    top = float(np.max(np.linalg.eigvalsh(form.real_quadratic()[0])))
    Y = form.Y - (top + margin) * np.eye(2 * k)
    form = GaussianQForm(2 * k, form.c0, form.gamma, form.X, Y, form.partition)
    return GaussianChannelSpec(k, form, f"random(k={k}, seed={seed})")


# -- probing and prediction ---------------------------------------------------


def _probe_exponent(choi: GaussianQForm, alpha: np.ndarray):
    b = choi.blocks()
    d = b["gamma_b"] + b["X_ab"].T @ alpha.conj() + b["Y_ab"].T @ alpha
    c = choi.c0 + np.real(
        2 * b["gamma_a"] @ alpha.conj()
        + alpha.conj() @ b["X_aa"] @ alpha.conj()
        + alpha @ b["Y_aa"] @ alpha.conj()
    )
    return d, float(c), b["X_bb"], b["Y_bb"]


def _source_choi(source):
    choi = getattr(source, "choi", source)
    k = getattr(source, "k", None) or choi.n_modes // 2
    return choi, k


def simulate_probe(spec: GaussianChannelSpec, alpha):
    """Output Q-form and probe record for the coherent input ``|alpha>``.

    The output form keeps the raw constant ``c`` (the record's measured data);
    it is not renormalized.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alpha.shape != (spec.k,):
        raise DimensionMismatch(f"alpha must have length {spec.k}, got {alpha.size}")
    d, c, Xbb, Ybb = _probe_exponent(spec.choi, alpha)
    record = ProbeRecord(alpha, d, c, Xbb, Ybb)
    return record.output_form(), record


def simulate_probes(spec: GaussianChannelSpec, alphas) -> list:
    return [simulate_probe(spec, a)[1] for a in alphas]


def predict_coherent(source, alpha, normalized: bool = True) -> GaussianQForm:
    """Q-form of the channel output for coherent input ``|alpha>``.

    ``source`` is anything carrying a partitioned Choi form: a
    :class:`GaussianChannelSpec`, a reconstruction, or the form itself.
    """
    choi, k = _source_choi(source)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alpha.shape != (k,):
        raise DimensionMismatch(f"alpha must have length {k}, got {alpha.size}")
    d, c, Xbb, Ybb = _probe_exponent(choi, alpha)
    form = GaussianQForm(k, c, d, Xbb, Ybb)
    return normalize(form) if normalized else form


def _check_q(q: float):
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")


def tmss_output_form(spec, q: float) -> GaussianQForm:
    """Q-form of the channel applied to one half of a TMSS with parameter ``q``.

    Uses ``T(q)|Z> = c_q exp(-(1 - q^2)|Z|^2 / 2) |qZ>`` on every a-mode.
    """
    _check_q(q)
    choi, k = _source_choi(spec)
    a, _ = (np.array(p) for p in choi.partition)
    scale = np.ones(2 * k)
    scale[a] = q
    gamma = choi.gamma * scale
    X = choi.X * np.outer(scale, scale)
    Y = choi.Y * np.outer(scale, scale)
    Y[a, a] -= 1.0 - q**2
    c0 = choi.c0 + k * np.log1p(-(q**2))
    return GaussianQForm(2 * k, c0, gamma, X, Y, choi.partition)


def nq_factor(alpha: complex, q: float) -> complex:
    """Prefactor ``N_q(alpha)`` in ``T^-1(q)|alpha*> = N_q(alpha)|alpha*/q>``."""
    _check_q(q)
    return complex(np.exp(-(abs(alpha) ** 2) * (1 - 1 / q**2) / 2) / np.sqrt(1 - q**2))


# -- general pure Gaussian inputs --------------------------------------------


@dataclass(frozen=True, eq=False)
class BargmannState:
    """Pure Gaussian state ``exp(kappa + mu.b^dag + 1/2 b^dag^T nu b^dag)|0>``."""

    kappa: complex
    mu: np.ndarray
    nu: np.ndarray = field(default=None)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=complex))
        nu = np.zeros((mu.size, mu.size), complex) if self.nu is None else self.nu
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", np.asarray(nu, dtype=complex).reshape(mu.size, mu.size))

    @property
    def k(self) -> int:
        return self.mu.size

    def conjugate(self) -> "BargmannState":
        """State with conjugated Fock coefficients."""
        return BargmannState(np.conj(self.kappa), self.mu.conj(), self.nu.conj())

    def amplitude(self, w) -> complex:
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        return np.exp(self.kappa + self.mu @ w + 0.5 * w @ self.nu @ w)

    @classmethod
    def coherent(cls, alpha) -> "BargmannState":
        alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
        return cls(-0.5 * np.vdot(alpha, alpha).real, alpha)

    @classmethod
    def displaced_squeezed(cls, r: float, Z: complex) -> "BargmannState":
        """``exp(-r/2 b^dag^2 + r/2 b^2) exp(Z b^dag - Z* b)|0>`` for real ``r``."""
        t = np.tanh(r)
        beta = Z * np.cosh(r) - np.conj(Z) * np.sinh(r)
        kappa = -0.5 * abs(beta) ** 2 - 0.5 * t * np.conj(beta) ** 2 - 0.5 * np.log(np.cosh(r))
        return cls(kappa, [beta + t * np.conj(beta)], [[-t]])


def _quadratic_coefficients(fn, m: int):
    """Exact ``(A, b, c)`` with ``fn(v) = c + b.v - v^T A v`` for a quadratic polynomial."""
    eye = np.eye(m)
    c = fn(np.zeros(m))
    plus = np.array([fn(e) for e in eye])
    minus = np.array([fn(-e) for e in eye])
    b = (plus - minus) / 2
    diag = (plus + minus) / 2 - c
    A = np.zeros((m, m), complex)
    for i in range(m):
        A[i, i] = -diag[i]
        for j in range(i + 1, m):
            fij = fn(eye[i] + eye[j])
            A[i, j] = A[j, i] = -(fij - c - b[i] - b[j] - diag[i] - diag[j]) / 2
    return A, b, c


def predict_state_q(source, state: BargmannState, Zb) -> float:
    """Output ``Q(Z_b)`` for a pure Gaussian input ``state`` on the b-modes.

    Evaluates ``<psi*| <Z_b| rho_choi |Z_b> |psi*>`` by inserting two coherent
    resolutions of identity on the a-modes and doing the resulting Gaussian
    integral in closed form.
    """
    choi, k = _source_choi(source)
    if state.k != k:
        raise DimensionMismatch(f"input state has {state.k} modes, channel has {k}")
    Zb = np.atleast_1d(np.asarray(Zb, dtype=complex))
    a_idx, b_idx = (np.array(p) for p in choi.partition)
    bar = state.conjugate()

    def log_integrand(v):
        # v = (Re beta, Re gamma, Im beta, Im gamma)
        beta = v[:k] + 1j * v[2 * k : 3 * k]
        gamma = v[k : 2 * k] + 1j * v[3 * k :]
        z = np.empty(2 * k, complex)
        zs = np.empty(2 * k, complex)
        z[a_idx], zs[a_idx] = gamma, beta.conj()
        z[b_idx], zs[b_idx] = Zb, Zb.conj()
        e = choi.c0 + choi.gamma @ z + choi.gamma.conj() @ zs
        e += 0.5 * z @ choi.X @ z + 0.5 * zs @ choi.X.conj() @ zs + zs @ choi.Y @ z
        e += state.kappa + state.mu @ beta + 0.5 * beta @ state.nu @ beta
        e += bar.kappa + bar.mu @ gamma.conj() + 0.5 * gamma.conj() @ bar.nu @ gamma.conj()
        e += -np.vdot(beta, beta) - np.vdot(gamma, gamma) + beta.conj() @ gamma
        return e

    A, b, c = _quadratic_coefficients(log_integrand, 4 * k)
    logval = log_complex_gaussian_integral(A, b, c) - 2 * k * np.log(np.pi)
    value = np.exp(logval)
    if abs(value.imag) > 1e-9 * max(1.0, abs(value.real)):
        raise ValueError(f"predicted Q-value has imaginary part {value.imag:.3g}")
    return float(value.real)


def bs_squeezed_output_form(theta: float, r: float, Z: complex) -> GaussianQForm:
    """Closed-form normalized output Q-form of the vacuum-ancilla beam splitter
    for the displaced squeezed input ``S(r) D(Z)|0>``.
    """
    t, s2, c = np.tanh(r), np.sin(theta) ** 2, np.cos(theta)
    g = 1 - t**2 * s2**2
    Y = (t**2 * s2 - 1) / g
    X = -t * c**2 / g
    gamma = c * (np.conj(Z) - Z * t * s2) / (g * np.cosh(r))
    return normalize(GaussianQForm(1, 0.0, [gamma], [[X]], [[Y]]))


# -- JSON ---------------------------------------------------------------------


def spec_to_dict(spec: GaussianChannelSpec) -> dict:
    return {"kind": "gaussian", "k": spec.k, "label": spec.label, "choi": form_to_dict(spec.choi)}


def spec_from_dict(data: dict) -> GaussianChannelSpec:
    """Parse a channel description (explicit Choi form or a named constructor)."""
    kind = data.get("kind")
    if kind == "gaussian":
        return GaussianChannelSpec(int(data["k"]), form_from_dict(data["choi"]), data.get("label", ""))
    if kind == "bs":
        return bs_channel(float(data["theta"]))
    if kind == "thermal":
        return thermal_noise_channel(float(data["nbar"]))
    if kind == "phase":
        return phase_channel(float(data["phi"]))
    if kind == "identity":
        return identity_channel(int(data.get("k", 1)))
    raise KeyError(f"unknown channel kind {kind!r}")


def named_parameters(data: dict) -> Optional[dict]:
    """Constructor parameters of a named single-mode channel, ``None`` for explicit forms."""
    kind = data.get("kind")
    if kind == "bs":
        return {"t": np.cos(float(data["theta"]))}
    if kind == "thermal":
        return {"t": 1.0, "nbar": float(data["nbar"])}
    if kind == "phase":
        return {"t": np.exp(1j * float(data["phi"]))}
    if kind == "identity" and int(data.get("k", 1)) == 1:
        return {"t": 1.0}
    return None
