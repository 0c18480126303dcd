"""Ideal gate library and stochastic noisy-gate constructors.

Every driven gate is modelled as a constant-generator pulse traversed
linearly in rescaled time s in [0, 1]: U_s = exp(-i s G) with
U_1 = U_g.  A noisy realisation of the gate is

    N = U_g  exp(Lambda)  exp(Xi)

where Lambda collects the deterministic second-order drift of the jump
operators in the interaction picture L_s = U_s^dag L U_s,

    Lambda = -1/2 sum_k eps_k^2 int_0^1 (L_s^dag L_s - L_s^2) ds,

and Xi = i sum_k eps_k I_k stacks one exact Gaussian draw I_k of
int_0^1 L_{k,s} dW_{k,s} per jump operator (independent Wiener
processes).  The ensemble average of N rho N^dag reproduces the driven
Lindblad evolution over the gate to second order in the noise
amplitudes eps_k = sqrt(rate_k * duration).

Idle relaxation and pre-measurement bitflip noise admit exactly
sampleable gates (no truncation); both are provided here, as are the
substep-path utilities used to cross-validate the exponential form
against the truncated perturbative series on a shared noise path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import I2, PAULI_X, PAULI_Y, PAULI_Z, dagger, expm, expm_2x2, kron
from .noise_model import NoiseContext, LindbladTerm
from .stochastic import RngStream, gauss_legendre_rule

__all__ = [
    "GateSpec",
    "DriveSchedule",
    "ideal_unitary",
    "drive_generator",
    "schedule",
    "interaction_jump",
    "lambda_matrix",
    "XiSampler",
    "sample_xi",
    "sample_noisy_gate",
    "NoisyGateSampler",
    "sample_spam_gate",
    "spam_gate_batch",
    "sample_relaxation_gate",
    "relaxation_gate_batch",
    "SubstepPath",
    "build_substep_path",
    "xi_from_path",
    "small_noise_reference",
    "estimate_commutator_term",
    "scale_context",
]

GATE_KINDS = ("RZ", "RX", "X", "SX", "CR", "CNOT", "IDLE")


@dataclass(frozen=True)
class GateSpec:
    """One gate instance: kind, target qubits and (optional) duration.

    ``theta``/``phi`` parametrise rotations; ``duration`` is in seconds
    and may be left None to be filled in from device calibration when
    the circuit is scheduled.  RZ is a virtual frame change: duration 0
    and noiseless.
    """

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None
    phi: float = 0.0
    duration: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind: {self.kind!r}")
        if self.kind in ("RX", "CR") and self.theta is None:
            raise ValueError(f"{self.kind} requires theta")
        if self.kind == "RZ" and self.duration not in (None, 0.0):
            raise ValueError("RZ is virtual and has zero duration")
        arity = 2 if self.kind in ("CR", "CNOT") else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")

    def with_duration(self, duration: float) -> "GateSpec":
        return GateSpec(self.kind, self.qubits, self.theta, self.phi, duration)

    @property
    def dim(self) -> int:
        return 2 ** len(self.qubits)


def _rx(theta: float, phi: float) -> np.ndarray:
    axis = math.cos(phi) * PAULI_X + math.sin(phi) * PAULI_Y
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * axis


def ideal_unitary(gate: GateSpec) -> np.ndarray:
    """Noise-free unitary of the gate (global phases fixed by the drive:
    X = RX(pi) = -iX_pauli, while CNOT is the textbook block-diag(I, X))."""
    kind = gate.kind
    if kind == "RZ":
        return np.array([[1, 0], [0, np.exp(1j * gate.phi)]], dtype=complex)
    if kind == "RX":
        return _rx(gate.theta, gate.phi)
    if kind == "X":
        return _rx(math.pi, gate.phi)
    if kind == "SX":
        return _rx(math.pi / 2, gate.phi)
    if kind == "CR":
        out = np.zeros((4, 4), dtype=complex)
        out[:2, :2] = _rx(gate.theta, gate.phi)
        out[2:, 2:] = _rx(-gate.theta, gate.phi)
        return out
    if kind == "CNOT":
        out = np.eye(4, dtype=complex)
        out[2:, 2:] = PAULI_X
        return out
    if kind == "IDLE":
        return I2.copy()
    raise ValueError(f"unknown gate kind: {kind!r}")


def _generator(gate: GateSpec) -> np.ndarray:
    """Dimensionless Hermitian G with exp(-i G) = ideal_unitary(gate)."""
    kind = gate.kind
    if kind == "RZ":
        raise ValueError("RZ is virtual: it has no drive schedule")
    if kind in ("RX", "X", "SX"):
        theta = {"X": math.pi, "SX": math.pi / 2}.get(kind, gate.theta)
        axis = math.cos(gate.phi) * PAULI_X + math.sin(gate.phi) * PAULI_Y
        return (theta / 2) * axis
    if kind == "CR":
        axis = math.cos(gate.phi) * PAULI_X + math.sin(gate.phi) * PAULI_Y
        return kron(PAULI_Z, (gate.theta / 2) * axis)
    if kind == "CNOT":
        proj1 = np.array([[0, 0], [0, 1]], dtype=complex)
        return (math.pi / 2) * kron(proj1, PAULI_X - I2)
    if kind == "IDLE":
        return np.zeros((2, 2), dtype=complex)
    raise ValueError(f"unknown gate kind: {kind!r}")


def drive_generator(gate: GateSpec) -> np.ndarray:
    """Public alias for the gate's dimensionless drive generator."""
    return _generator(gate)


class DriveSchedule:
    """Constant-generator pulse: unitary_at(s) = exp(-i s G), s in [0, 1].

    The generator is Hermitian, so interaction-picture conjugations at
    many time nodes are evaluated from one eigendecomposition.
    """

    def __init__(self, generator: np.ndarray, duration: float):
        self.generator = np.asarray(generator, dtype=complex)
        self.duration = float(duration)
        self._evals, self._evecs = np.linalg.eigh(self.generator)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def unitaries(self, svals: np.ndarray) -> np.ndarray:
        """Stack of U_s for every s in ``svals``, shape (len(s), d, d)."""
        phases = np.exp(-1j * np.outer(np.asarray(svals, dtype=float), self._evals))
        return np.einsum("ij,sj,kj->sik", self._evecs, phases, self._evecs.conj())

    def unitary_at(self, s: float) -> np.ndarray:
        return self.unitaries(np.array([s]))[0]


def schedule(gate: GateSpec) -> DriveSchedule:
    """Drive schedule traversing the gate linearly in rescaled time."""
    if gate.kind == "RZ":
        raise ValueError("RZ is virtual: it has no drive schedule")
    duration = gate.duration if gate.duration is not None else 0.0
    return DriveSchedule(_generator(gate), duration)


def interaction_jump(sched: DriveSchedule, jump: np.ndarray, s: float) -> np.ndarray:
    """Jump operator in the interaction picture, U_s^dag L U_s."""
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"s must lie in [0, 1], got {s}")
    u = sched.unitary_at(s)
    return dagger(u) @ np.asarray(jump, dtype=complex) @ u


_QUAD_NODES = 32
_QUAD_PANELS = 4


def _interaction_stack(sched: DriveSchedule, jump: np.ndarray, svals: np.ndarray) -> np.ndarray:
    u = sched.unitaries(svals)
    return np.einsum("sji,jk,skl->sil", u.conj(), np.asarray(jump, dtype=complex), u)


def lambda_matrix(sched: DriveSchedule, ctx: NoiseContext) -> np.ndarray:
    """Deterministic drift -1/2 sum_k eps_k^2 int (L_s^dag L_s - L_s^2) ds.

    Vanishes identically for Hermitian jumps (L^dag L = L^2)."""
    d = sched.dim
    out = np.zeros((d, d), dtype=complex)
    svals, w = gauss_legendre_rule(_QUAD_NODES, _QUAD_PANELS)
    for term in ctx.terms:
        if term.epsilon == 0.0:
            continue
        ls = _interaction_stack(sched, term.operator, svals)
        integ = np.einsum("s,sij->ij", w, dagger(ls) @ ls - ls @ ls)
        out -= 0.5 * term.epsilon**2 * integ
    return out


class XiSampler:
    """Exact Gaussian sampler for Xi = i sum_k eps_k int L_{k,s} dW_{k,s}.

    Precomputes, per jump operator, the covariance factor of the stacked
    real vector [Re I, Im I] via the Ito isometry on the gate's
    quadrature grid, then fuses all terms into a single real matrix B so
    a batch of draws is one ``(S, R) @ (R, 2 d^2)`` product.
    """

    def __init__(self, sched: DriveSchedule, ctx: NoiseContext):
        d = sched.dim
        self.dim = d
        svals, w = gauss_legendre_rule(_QUAD_NODES, _QUAD_PANELS)
        blocks = []
        for term in ctx.terms:
            if term.epsilon == 0.0:
                continue
            ls = _interaction_stack(sched, term.operator, svals)
            vals = np.concatenate(
                [ls.reshape(len(svals), -1).real, ls.reshape(len(svals), -1).imag], axis=1
            )
            cov = (vals * w[:, None]).T @ vals
            lam, u = np.linalg.eigh(cov)
            keep = lam > 1e-14 * max(float(lam.max()), 1.0)
            if not np.any(keep):
                continue
            factor = u[:, keep] * np.sqrt(lam[keep])
            # multiply the complex draw by i*eps: (re, im) -> eps*(-im, re)
            n = d * d
            rotated = np.empty_like(factor)
            rotated[:n] = -term.epsilon * factor[n:]
            rotated[n:] = term.epsilon * factor[:n]
            blocks.append(rotated)
        self.factor = np.concatenate(blocks, axis=1) if blocks else np.zeros((2 * d * d, 0))
        self.n_gaussians = self.factor.shape[1]

    def sample(self, gen: np.random.Generator, size: int | None = None) -> np.ndarray:
        d = self.dim
        n = 1 if size is None else size
        g = gen.standard_normal((n, self.n_gaussians))
        v = g @ self.factor.T
        out = (v[:, : d * d] + 1j * v[:, d * d :]).reshape(n, d, d)
        return out[0] if size is None else out


def sample_xi(sched: DriveSchedule, ctx: NoiseContext, rng: RngStream | np.random.Generator) -> np.ndarray:
    gen = rng.generator if isinstance(rng, RngStream) else rng
    return XiSampler(sched, ctx).sample(gen)


def sample_noisy_gate(
    sched: DriveSchedule, ctx: NoiseContext, rng: RngStream | np.random.Generator
) -> np.ndarray:
    """One noisy realisation N = U_g exp(Lambda) exp(Xi); non-unitary in
    general, exactly the ideal unitary when all rates vanish."""
    u_g = sched.unitary_at(1.0)
    lam = lambda_matrix(sched, ctx)
    xi = sample_xi(sched, ctx, rng)
    return u_g @ expm(lam) @ expm(xi)


class NoisyGateSampler:
    """Batched sampler for one (gate, noise context) pair.

    Fuses U_g exp(Lambda) into a single prefix matrix and keeps the
    Gaussian factor for Xi, so sampling S realisations costs one
    Gaussian block, one batched exponential and one batched product.
    """

    def __init__(self, sched: DriveSchedule, ctx: NoiseContext):
        self.dim = sched.dim
        self.prefix = sched.unitary_at(1.0) @ expm(lambda_matrix(sched, ctx))
        self.xi = XiSampler(sched, ctx)

    def sample_batch(self, gen: np.random.Generator, size: int) -> np.ndarray:
        if self.xi.n_gaussians == 0:
            return np.broadcast_to(self.prefix, (size, self.dim, self.dim))
        xi = self.xi.sample(gen, size)
        e_xi = expm_2x2(xi) if self.dim == 2 else expm(xi)
        return self.prefix[None, :, :] @ e_xi


def sample_spam_gate(v: float, rng: RngStream | np.random.Generator) -> np.ndarray:
    """Pre-measurement bitflip noise gate exp(i w X), w ~ N(0, v).

    Unitary for every draw; averaging N rho N^dag over draws gives the
    bitflip channel with p = (1 - e^{-2v})/2.
    """
    if v < 0:
        raise ValueError("strength v must be >= 0")
    gen = rng.generator if isinstance(rng, RngStream) else rng
    return spam_gate_batch(v, gen, 1)[0]


def spam_gate_batch(v: float, gen: np.random.Generator, size: int) -> np.ndarray:
    w = gen.normal(0.0, math.sqrt(v), size=size) if v > 0 else np.zeros(size)
    out = np.zeros((size, 2, 2), dtype=complex)
    out[:, 0, 0] = out[:, 1, 1] = np.cos(w)
    out[:, 0, 1] = out[:, 1, 0] = 1j * np.sin(w)
    return out


def sample_relaxation_gate(
    gamma1: float, gamma_pd: float, dt: float, rng: RngStream | np.random.Generator
) -> np.ndarray:
    """Exact idle relaxation gate (amplitude + phase damping over dt).

    Upper triangular with phase e^{i a W2} (a = sqrt(gamma_pd/4),
    W2 ~ N(0, dt)) and a Gaussian amplitude-transfer entry
    i S e^{-i a W2}, S ~ N(0, 1 - e^{-gamma1 dt}); the ensemble average
    of N rho N^dag equals the relaxation channel for any dt.
    """
    gen = rng.generator if isinstance(rng, RngStream) else rng
    return relaxation_gate_batch(gamma1, gamma_pd, dt, gen, 1)[0]


def relaxation_gate_batch(
    gamma1: float, gamma_pd: float, dt: float, gen: np.random.Generator, size: int
) -> np.ndarray:
    if gamma1 < 0 or gamma_pd < 0:
        raise ValueError("rates must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    alpha = math.sqrt(gamma_pd / 4.0)
    w2 = gen.normal(0.0, math.sqrt(dt), size=size) if gamma_pd > 0 else np.zeros(size)
    var_s = -math.expm1(-gamma1 * dt)
    s = gen.normal(0.0, math.sqrt(var_s), size=size) if var_s > 0 else np.zeros(size)
    phase = np.exp(1j * alpha * w2)
    out = np.zeros((size, 2, 2), dtype=complex)
    out[:, 0, 0] = phase
    out[:, 0, 1] = 1j * s / phase
    out[:, 1, 1] = math.exp(-0.5 * gamma1 * dt) / phase
    return out


def scale_context(ctx: NoiseContext, scale: float) -> NoiseContext:
    """Context with every amplitude eps scaled (rates scaled by scale^2);
    used for order-of-convergence sweeps."""
    terms = tuple(
        LindbladTerm(operator=t.operator, rate=t.rate * scale**2, epsilon=t.epsilon * scale)
        for t in ctx.terms
    )
    return NoiseContext(terms=terms, gate_duration=ctx.gate_duration)


# ---------------------------------------------------------------------------
# Substep (Riemann) path machinery: brute-force oracle shared between the
# exponential gate and the truncated small-noise series.


@dataclass(frozen=True)
class SubstepPath:
    """Wiener increments dW[k, m] ~ N(0, 1/M) for each jump operator k on
    the uniform grid s_m = m/M (left endpoints, Ito convention)."""

    increments: np.ndarray

    @property
    def n_terms(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]


def build_substep_path(
    ctx: NoiseContext, m_substeps: int, rng: RngStream | np.random.Generator
) -> SubstepPath:
    gen = rng.generator if isinstance(rng, RngStream) else rng
    inc = gen.normal(0.0, math.sqrt(1.0 / m_substeps), size=(len(ctx.terms), m_substeps))
    return SubstepPath(increments=inc)


def _path_pieces(sched: DriveSchedule, ctx: NoiseContext, path: SubstepPath):
    """Combined increment matrices A_m = sum_k eps_k L_{k,s_m} dW_{k,m},
    their exclusive prefix sums S_m, and the total S_1."""
    m = path.n_steps
    svals = np.arange(m) / m
    d = sched.dim
    a = np.zeros((m, d, d), dtype=complex)
    for k, term in enumerate(ctx.terms):
        if term.epsilon == 0.0:
            continue
        ls = _interaction_stack(sched, term.operator, svals)
        a += term.epsilon * path.increments[k][:, None, None] * ls
    prefix = np.cumsum(a, axis=0) - a  # exclusive: S at the left endpoint
    return a, prefix, a.sum(axis=0)


def estimate_commutator_term(
    sched: DriveSchedule,
    ctx: NoiseContext,
    rng: RngStream | np.random.Generator | None = None,
    m_substeps: int = 4096,
    path: SubstepPath | None = None,
) -> np.ndarray:
    """Substep estimate of the double-Ito commutator
    C = sum_{k,l} eps_k eps_l int dW_{k,s} int_0^s dW_{l,s'} [L_{k,s}, L_{l,s'}].

    Diagnostic only: this term is dropped from the sampled gate, and its
    ensemble effect sits below the third-order error budget.
    """
    if path is None:
        if rng is None:
            raise ValueError("provide either rng or a pre-drawn path")
        path = build_substep_path(ctx, m_substeps, rng)
    a, prefix, _ = _path_pieces(sched, ctx, path)
    return np.einsum("mij,mjk->ik", a, prefix) - np.einsum("mij,mjk->ik", prefix, a)


def xi_from_path(sched: DriveSchedule, ctx: NoiseContext, path: SubstepPath,
                 include_commutator: bool = True) -> np.ndarray:
    """Substep realisation of Xi = i sum_k eps_k S1_k - 1/2 C on the
    given path (set ``include_commutator=False`` for the production form
    that drops C)."""
    a, prefix, s1 = _path_pieces(sched, ctx, path)
    xi = 1j * s1
    if include_commutator:
        comm = np.einsum("mij,mjk->ik", a, prefix) - np.einsum("mij,mjk->ik", prefix, a)
        xi = xi - 0.5 * comm
    return xi


def small_noise_reference(sched: DriveSchedule, ctx: NoiseContext, path: SubstepPath) -> np.ndarray:
    """Truncated perturbative evolution operator on the shared path:

        N' = 1 + i sum_k eps_k S1_k
               - [ 1/2 sum_k eps_k^2 int L_k,s^dag L_k,s ds
                   + sum_m A_m S_m ]        (Ito: S_m before the increment)

    Cross-validation oracle: U_g N' agrees with the exponential gate
    built from the same path to third order in the amplitudes.
    """
    d = sched.dim
    a, prefix, s1 = _path_pieces(sched, ctx, path)
    drift = np.zeros((d, d), dtype=complex)
    svals, w = gauss_legendre_rule(_QUAD_NODES, _QUAD_PANELS)
    for term in ctx.terms:
        if term.epsilon == 0.0:
            continue
        ls = _interaction_stack(sched, term.operator, svals)
        drift += 0.5 * term.epsilon**2 * np.einsum("s,sij->ij", w, dagger(ls) @ ls)
    stochastic = np.einsum("mij,mjk->ik", a, prefix)
    return np.eye(d, dtype=complex) + 1j * s1 - drift - stochastic
