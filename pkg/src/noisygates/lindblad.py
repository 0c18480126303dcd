"""Reference density-matrix integrator for the driven Lindblad equation

    d rho / dt = -i [H, rho] + sum_k gamma_k (L rho L^dag - 1/2 {L^dag L, rho})

with a piecewise-constant Hamiltonian schedule.  Classic fixed-step RK4;
because the equation is linear and autonomous on each segment, one RK4
step is a fixed superoperator which is precomputed once per segment and
then applied per step, with Hermitian symmetrisation each step to
suppress round-off drift.  This keeps long repeated-gate references
(tens of thousands of gates) cheap and bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import dagger
from .noise_model import LindbladTerm

__all__ = [
    "LindbladProblem",
    "lindblad_rhs",
    "rhs_superoperator",
    "rk4_step_matrix",
    "solve",
    "repeated_gate_solve",
    "write_rho_series_csv",
]


@dataclass(frozen=True)
class LindbladProblem:
    """Hamiltonian schedule (generator in 1/s, duration in s) with jump
    terms on the full register and an initial density matrix."""

    hamiltonians: tuple[tuple[np.ndarray, float], ...]
    terms: tuple[LindbladTerm, ...]
    rho0: np.ndarray

    def __post_init__(self):
        for h, duration in self.hamiltonians:
            if not np.all(np.isfinite(h)):
                raise ValueError("non-finite Hamiltonian generator")
            if duration <= 0:
                raise ValueError("segment durations must be positive")


def lindblad_rhs(rho: np.ndarray, hamiltonian: np.ndarray, terms) -> np.ndarray:
    """Right-hand side of the master equation (terms = LindbladTerm list
    or (rate, operator) pairs)."""
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(hamiltonian, dtype=complex)
    out = -1j * (h @ rho - rho @ h)
    for term in terms:
        if isinstance(term, LindbladTerm):
            rate, op = term.rate, term.operator
        else:
            rate, op = term
        if rate == 0.0:
            continue
        opd = dagger(op)
        opdop = opd @ op
        out += rate * (op @ rho @ opd - 0.5 * (opdop @ rho + rho @ opdop))
    return out


def rhs_superoperator(hamiltonian: np.ndarray, terms) -> np.ndarray:
    """Matrix M acting on row-major vec(rho) with vec(d rho/dt) = M vec(rho)."""
    h = np.asarray(hamiltonian, dtype=complex)
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    m = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for term in terms:
        if isinstance(term, LindbladTerm):
            rate, op = term.rate, term.operator
        else:
            rate, op = term
        if rate == 0.0:
            continue
        opd = dagger(op)
        opdop = opd @ op
        m += rate * (
            np.kron(op, op.conj())
            - 0.5 * np.kron(opdop, eye)
            - 0.5 * np.kron(eye, opdop.T)
        )
    return m


def rk4_step_matrix(rhs_matrix: np.ndarray, dt: float) -> np.ndarray:
    """Exact RK4 update matrix I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24."""
    hm = dt * rhs_matrix
    d2 = hm.shape[0]
    out = np.eye(d2, dtype=complex) + hm
    power = hm
    for k in (2, 3, 4):
        power = power @ hm / k
        out += power
    return out


def solve(problem: LindbladProblem, dt_max: float) -> tuple[np.ndarray, list[np.ndarray]]:
    """Integrate the problem, emitting rho at every segment boundary.

    The step divides each segment evenly with step <= dt_max.  Returns
    (times, states) including the initial state at t = 0.  Aborts with a
    diagnostic if the state leaves the finite range (instability).
    """
    if dt_max <= 0:
        raise ValueError("dt_max must be positive")
    rho = np.array(problem.rho0, dtype=complex)
    d = rho.shape[0]
    times = [0.0]
    states = [rho.copy()]
    t = 0.0
    cache: dict[int, np.ndarray] = {}
    for seg_index, (h, duration) in enumerate(problem.hamiltonians):
        key = id(problem.hamiltonians[seg_index][0])
        steps = max(1, math.ceil(duration / dt_max))
        step_key = (key, duration, steps)
        if step_key not in cache:
            m = rhs_superoperator(h, problem.terms)
            cache[step_key] = rk4_step_matrix(m, duration / steps)
        step = cache[step_key]
        vec = rho.reshape(-1)
        for _ in range(steps):
            vec = step @ vec
            rho = vec.reshape(d, d)
            rho = 0.5 * (rho + dagger(rho))
            vec = rho.reshape(-1)
        if not np.all(np.isfinite(rho)):
            raise FloatingPointError(
                f"Lindblad integration diverged in segment {seg_index} (t={t:g})"
            )
        t += duration
        times.append(t)
        states.append(rho.copy())
    return np.array(times), states


def repeated_gate_solve(
    hamiltonian: np.ndarray,
    duration: float,
    terms,
    n_gates: int,
    rho0: np.ndarray,
    steps_per_gate: int = 100,
    record_every: int = 1,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Fast path for long chains of one identical gate.

    Builds the RK4 map of a whole gate (step matrix to the power
    ``steps_per_gate``) once and iterates it, symmetrising at gate
    boundaries.  Identical in exact arithmetic to :func:`solve` on the
    same grid; used for asymptote diagnostics over thousands of gates.
    """
    m = rhs_superoperator(hamiltonian, terms)
    step = rk4_step_matrix(m, duration / steps_per_gate)
    gate_map = np.linalg.matrix_power(step, steps_per_gate)
    d = rho0.shape[0]
    rho = np.array(rho0, dtype=complex)
    times = [0.0]
    states = [rho.copy()]
    for g in range(1, n_gates + 1):
        vec = gate_map @ rho.reshape(-1)
        rho = vec.reshape(d, d)
        rho = 0.5 * (rho + dagger(rho))
        if not np.all(np.isfinite(rho)):
            raise FloatingPointError(f"Lindblad integration diverged at gate {g}")
        if g % record_every == 0 or g == n_gates:
            times.append(g * duration)
            states.append(rho.copy())
    return np.array(times), states


def write_rho_series_csv(path, times: np.ndarray, states: list[np.ndarray], diagonal_only: bool = False) -> None:
    """CSV dump: time, then row-major Re/Im of rho (or just the diagonal)."""
    d = states[0].shape[0]
    with open(path, "w", newline="") as fh:
        if diagonal_only:
            header = ["time_s"] + [f"rho_{i}{i}" for i in range(d)]
            fh.write(",".join(header) + "\n")
            for t, rho in zip(times, states):
                row = [repr(float(t))] + [repr(float(np.real(rho[i, i]))) for i in range(d)]
                fh.write(",".join(row) + "\n")
            return
        header = ["time_s"]
        for i in range(d):
            for j in range(d):
                header += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
        fh.write(",".join(header) + "\n")
        for t, rho in zip(times, states):
            row = [repr(float(t))]
            for i in range(d):
                for j in range(d):
                    row += [repr(float(np.real(rho[i, j]))), repr(float(np.imag(rho[i, j])))]
            fh.write(",".join(row) + "\n")
