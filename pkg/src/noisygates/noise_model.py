"""Device calibration and its conversion to jump operators with rates.

The calibration file is a strict JSON document::

    {
      "qubits": [ {"t1_s": float, "t2_s": float, "p_readout": float}, ... ],
      "gates":  {"t_1q_s": float, "t_2q_s": float, "p_1q": float, "p_2q": float}
    }

All times are in seconds; unknown keys are rejected.  Rates are derived
so that the continuous jump processes reproduce the corresponding
discrete channels exactly over one gate duration:

* amplitude damping gamma1 = 1/T1 and pure dephasing
  gamma_pd = 2/T2 - 1/T1 (requires T2 <= 2 T1),
* single-qubit depolarising jumps X, Y, Z each at
  gamma_d = -ln(1-p)/(4 t) contract the Bloch vector by exactly (1-p),
* the 15 two-qubit Pauli jumps each at gamma_d2 = -ln(1-p)/(16 t)
  reproduce the symmetric two-qubit depolarising channel with total
  error p,
* the readout bitflip probability p maps to the pre-measurement noise
  strength v = -ln(1-2p)/2 via p = (1 - e^{-2v})/2.

Each jump operator carries a dimensionless amplitude
epsilon = sqrt(rate * duration).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .linalg import DECAY, I2, PAULI_X, PAULI_Y, PAULI_Z, kron

if TYPE_CHECKING:  # pragma: no cover
    from .gates import GateSpec

__all__ = [
    "CalibrationError",
    "QubitParams",
    "DeviceParams",
    "load_calibration",
    "relaxation_rates",
    "depolarizing_rate",
    "two_qubit_depolarizing_rate",
    "spam_strength",
    "LindbladTerm",
    "NoiseContext",
    "noise_context_for_gate",
    "relaxation_context",
    "TWO_QUBIT_PAULIS",
]


class CalibrationError(ValueError):
    """Raised for malformed or physically inconsistent calibration data."""


@dataclass(frozen=True)
class QubitParams:
    t1_s: float
    t2_s: float
    p_readout: float

    def __post_init__(self):
        if not (self.t1_s > 0 and self.t2_s > 0):
            raise CalibrationError("T1 and T2 must be positive")
        if self.t2_s > 2 * self.t1_s:
            raise CalibrationError(
                f"T2 exceeds 2*T1 (t2_s={self.t2_s:g}, t1_s={self.t1_s:g})"
            )
        if not (0 <= self.p_readout < 1):
            raise CalibrationError(f"p_readout out of [0, 1): {self.p_readout:g}")


@dataclass(frozen=True)
class DeviceParams:
    qubits: tuple[QubitParams, ...]
    t_1q_s: float
    t_2q_s: float
    p_1q: float
    p_2q: float

    def __post_init__(self):
        if not self.qubits:
            raise CalibrationError("at least one qubit required")
        if not (self.t_1q_s > 0 and self.t_2q_s > 0):
            raise CalibrationError("gate durations must be positive")
        for name in ("p_1q", "p_2q"):
            p = getattr(self, name)
            if not (0 <= p < 1):
                raise CalibrationError(f"{name} out of [0, 1): {p:g}")

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def gate_duration(self, n_gate_qubits: int) -> float:
        return self.t_1q_s if n_gate_qubits == 1 else self.t_2q_s


_QUBIT_KEYS = {"t1_s", "t2_s", "p_readout"}
_GATE_KEYS = {"t_1q_s", "t_2q_s", "p_1q", "p_2q"}


def _require_number(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise CalibrationError(f"missing key '{key}' in {where}")
    val = obj[key]
    if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
        raise CalibrationError(f"key '{key}' in {where} must be a finite number")
    return float(val)


def load_calibration(source: str | Path | dict) -> DeviceParams:
    """Parse and validate a calibration document (path, JSON text or dict)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = source
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.strip().endswith(".json")):
            text = Path(source).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CalibrationError(f"calibration is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CalibrationError("calibration root must be an object")
    extra = set(doc) - {"qubits", "gates"}
    if extra:
        raise CalibrationError(f"unknown top-level keys: {sorted(extra)}")
    if "qubits" not in doc or "gates" not in doc:
        raise CalibrationError("calibration must contain 'qubits' and 'gates'")
    if not isinstance(doc["qubits"], list) or not doc["qubits"]:
        raise CalibrationError("'qubits' must be a non-empty list")

    qubits = []
    for i, q in enumerate(doc["qubits"]):
        if not isinstance(q, dict):
            raise CalibrationError(f"qubit {i} must be an object")
        extra = set(q) - _QUBIT_KEYS
        if extra:
            raise CalibrationError(f"unknown keys in qubit {i}: {sorted(extra)}")
        qubits.append(
            QubitParams(
                t1_s=_require_number(q, "t1_s", f"qubit {i}"),
                t2_s=_require_number(q, "t2_s", f"qubit {i}"),
                p_readout=_require_number(q, "p_readout", f"qubit {i}"),
            )
        )

    gates = doc["gates"]
    if not isinstance(gates, dict):
        raise CalibrationError("'gates' must be an object")
    extra = set(gates) - _GATE_KEYS
    if extra:
        raise CalibrationError(f"unknown keys in 'gates': {sorted(extra)}")
    return DeviceParams(
        qubits=tuple(qubits),
        t_1q_s=_require_number(gates, "t_1q_s", "'gates'"),
        t_2q_s=_require_number(gates, "t_2q_s", "'gates'"),
        p_1q=_require_number(gates, "p_1q", "'gates'"),
        p_2q=_require_number(gates, "p_2q", "'gates'"),
    )


def relaxation_rates(t1: float, t2: float) -> tuple[float, float]:
    """(gamma1, gamma_pd) = (1/T1, 2/T2 - 1/T1); T2 = 2 T1 gives pure
    amplitude damping (gamma_pd = 0)."""
    if not (t1 > 0 and t2 > 0):
        raise ValueError("T1 and T2 must be positive")
    if t2 > 2 * t1:
        raise ValueError(f"T2 exceeds 2*T1 (t2={t2:g}, t1={t1:g})")
    gamma1 = 1.0 / t1
    gamma_pd = 2.0 / t2 - 1.0 / t1
    return gamma1, max(gamma_pd, 0.0)


def depolarizing_rate(p_gate: float, duration: float) -> float:
    """Rate for each of the X, Y, Z jumps so that one gate duration
    contracts the Bloch vector by exactly (1 - p_gate)."""
    if not (0 <= p_gate < 1):
        raise ValueError(f"p_gate out of [0, 1): {p_gate:g}")
    if duration <= 0:
        raise ValueError("duration must be positive")
    return -math.log1p(-p_gate) / (4.0 * duration)


def two_qubit_depolarizing_rate(p_gate: float, duration: float) -> float:
    """Rate for each of the 15 non-identity Pauli-pair jumps so that one
    gate duration reproduces the symmetric two-qubit depolarising
    channel with total error p_gate (every non-identity Pauli
    coefficient contracts by 1 - p_gate, decay rate 16*rate)."""
    if not (0 <= p_gate < 1):
        raise ValueError(f"p_gate out of [0, 1): {p_gate:g}")
    if duration <= 0:
        raise ValueError("duration must be positive")
    return -math.log1p(-p_gate) / (16.0 * duration)


def spam_strength(p_readout: float) -> float:
    """Pre-measurement noise strength v with p = (1 - e^{-2v})/2, i.e.
    v = -ln(1 - 2p)/2.  Requires p < 1/2."""
    if not (0 <= p_readout < 0.5):
        raise ValueError(f"p_readout must be in [0, 0.5): {p_readout:g}")
    return -0.5 * math.log1p(-2.0 * p_readout)


@dataclass(frozen=True)
class LindbladTerm:
    """Jump operator with rate (1/s) and dimensionless amplitude
    epsilon = sqrt(rate * duration)."""

    operator: np.ndarray
    rate: float
    epsilon: float

    @classmethod
    def from_rate(cls, operator: np.ndarray, rate: float, duration: float) -> "LindbladTerm":
        if rate < 0:
            raise ValueError("rate must be >= 0")
        return cls(operator=np.asarray(operator, dtype=complex), rate=rate, epsilon=math.sqrt(rate * duration))


@dataclass(frozen=True)
class NoiseContext:
    """Jump terms attached to one gate (or idle slot)."""

    terms: tuple[LindbladTerm, ...]
    gate_duration: float

    @property
    def dim(self) -> int:
        return self.terms[0].operator.shape[0] if self.terms else 0


def _pauli_pairs() -> tuple[np.ndarray, ...]:
    singles = (I2, PAULI_X, PAULI_Y, PAULI_Z)
    return tuple(kron(a, b) for a, b in itertools.product(singles, repeat=2))[1:]


TWO_QUBIT_PAULIS = _pauli_pairs()


def relaxation_context(qubit: QubitParams, duration: float) -> NoiseContext:
    """Relaxation-only context (idle slots carry no depolarisation)."""
    gamma1, gamma_pd = relaxation_rates(qubit.t1_s, qubit.t2_s)
    terms = (
        LindbladTerm.from_rate(DECAY, gamma1, duration),
        LindbladTerm.from_rate(PAULI_Z, gamma_pd / 4.0, duration),
    )
    return NoiseContext(terms=terms, gate_duration=duration)


def noise_context_for_gate(gate: "GateSpec", params: DeviceParams) -> NoiseContext:
    """Jump terms for a driven gate: per-qubit relaxation plus the
    depolarising set matching the gate's error probability, all with the
    gate's duration."""
    qubits = gate.qubits
    if any(q >= params.n_qubits for q in qubits):
        raise ValueError(f"gate qubits {qubits} not in device (n={params.n_qubits})")
    duration = gate.duration if gate.duration is not None else params.gate_duration(len(qubits))
    if gate.kind == "RZ" or duration == 0:
        return NoiseContext(terms=(), gate_duration=0.0)
    if gate.kind == "IDLE":
        return relaxation_context(params.qubits[qubits[0]], duration)

    terms: list[LindbladTerm] = []
    if len(qubits) == 1:
        q = params.qubits[qubits[0]]
        gamma1, gamma_pd = relaxation_rates(q.t1_s, q.t2_s)
        gamma_d = depolarizing_rate(params.p_1q, duration)
        terms.append(LindbladTerm.from_rate(DECAY, gamma1, duration))
        terms.append(LindbladTerm.from_rate(PAULI_Z, gamma_pd / 4.0, duration))
        for pauli in (PAULI_X, PAULI_Y, PAULI_Z):
            terms.append(LindbladTerm.from_rate(pauli, gamma_d, duration))
    elif len(qubits) == 2:
        for pos, idx in enumerate(qubits):
            q = params.qubits[idx]
            gamma1, gamma_pd = relaxation_rates(q.t1_s, q.t2_s)
            embed = (lambda op: kron(op, I2)) if pos == 0 else (lambda op: kron(I2, op))
            terms.append(LindbladTerm.from_rate(embed(DECAY), gamma1, duration))
            terms.append(LindbladTerm.from_rate(embed(PAULI_Z), gamma_pd / 4.0, duration))
        gamma_d2 = two_qubit_depolarizing_rate(params.p_2q, duration)
        for pauli in TWO_QUBIT_PAULIS:
            terms.append(LindbladTerm.from_rate(pauli, gamma_d2, duration))
    else:
        raise ValueError(f"unsupported gate arity: {len(qubits)}")
    return NoiseContext(terms=tuple(terms), gate_duration=duration)
