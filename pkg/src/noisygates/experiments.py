"""Benchmark experiments: repeated-gate circuits run through the
trajectory engine, the Kraus channel simulator and the Lindblad
reference, plus the Hellinger comparison protocol.

The repeated-gate experiments mirror a standard stress test: initialise
the register, apply the same native gate N times and track the outcome
distribution at checkpoints.  ``repeat_x`` drives one qubit; the
two-qubit experiments start from |10> (prepared by a leading X gate,
which is noisy like every other gate and included in all backends) and
repeat a CR or CNOT gate.  The CNOT experiment measures both qubits, so
every checkpoint includes pre-measurement readout noise in all
backends; the X and CR experiments compare bare populations.

The channel backend is evaluated exactly and then *sampled* with the
configured number of shots per checkpoint, so its run-to-run scatter is
comparable with the trajectory backend (both emulate a finite-shot
simulator run).  The Lindblad reference is deterministic.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import apply_channel, bitflip_channel, embed_operator, run_channel_sim
from .engine import (
    Circuit,
    RunConfig,
    ScheduledCircuit,
    expand_cnots,
    run_shots,
    schedule_layers,
)
from .gates import GateSpec, drive_generator, ideal_unitary
from .lindblad import LindbladProblem, solve
from .linalg import DECAY, PAULI_X, PAULI_Y, PAULI_Z
from .metrics import hellinger, mean_std_over_runs
from .noise_model import (
    DeviceParams,
    LindbladTerm,
    TWO_QUBIT_PAULIS,
    depolarizing_rate,
    relaxation_rates,
    two_qubit_depolarizing_rate,
)
from .stochastic import RngStream

__all__ = [
    "BACKENDS",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "build_experiment_circuit",
    "checkpoint_gate_counts",
    "lindblad_reference",
    "noisy_ensemble",
    "noisy_backend_run",
    "channel_backend_run",
    "run_compare",
]

BACKENDS = ("noisy_gates", "channel", "lindblad")
EXPERIMENTS = ("repeat_x", "repeat_cr", "repeat_cnot", "custom_circuit")

# Stream index offsets keep the three stochastic consumers independent.
_CHANNEL_STREAM_BASE = 1_000_000
_LINDBLAD_STEPS_PER_SEGMENT = 100


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    device: DeviceParams
    repetitions: int = 100
    checkpoints: int = 50
    shots: int = 1000
    runs: int = 10
    seed: int = 0
    backends: tuple[str, ...] = BACKENDS
    estimator: str = "weighted"
    cnot_mode: str = "direct"
    circuit: Circuit | None = None
    parallel: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not (1 <= self.checkpoints <= self.repetitions):
            raise ValueError("checkpoints must lie in 1..repetitions")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        unknown = set(self.backends) - set(BACKENDS)
        if unknown:
            raise ValueError(f"unknown backends: {sorted(unknown)}")
        if self.experiment == "custom_circuit" and self.circuit is None:
            raise ValueError("custom_circuit requires a parsed circuit")


def checkpoint_gate_counts(repetitions: int, checkpoints: int) -> tuple[int, ...]:
    """Evenly spaced cumulative gate counts, ending at ``repetitions``."""
    counts = sorted({max(1, round((j + 1) * repetitions / checkpoints)) for j in range(checkpoints)})
    return tuple(counts)


def build_experiment_circuit(config: ExperimentConfig) -> tuple[Circuit, tuple[int, ...], tuple[int, ...]]:
    """Returns (circuit, checkpoint layer indices, checkpoint gate counts)."""
    if config.experiment == "custom_circuit":
        circ = config.circuit
        if config.cnot_mode == "decomposed":
            circ = expand_cnots(circ)
        return circ, (circ.n_layers,), (circ.n_layers,)

    counts = checkpoint_gate_counts(config.repetitions, config.checkpoints)
    if config.experiment == "repeat_x":
        gates = [GateSpec("X", (0,)) for _ in range(config.repetitions)]
        circ = Circuit(1, tuple((g,) for g in gates), measured=())
        layers = tuple(counts)
        return circ, layers, counts

    prep = GateSpec("X", (0,))
    if config.experiment == "repeat_cr":
        body = [GateSpec("CR", (0, 1), theta=math.pi, phi=0.0) for _ in range(config.repetitions)]
        circ = Circuit(2, tuple([(prep,)] + [(g,) for g in body]), measured=())
        layers = tuple(1 + c for c in counts)
        return circ, layers, counts

    body = [GateSpec("CNOT", (0, 1)) for _ in range(config.repetitions)]
    circ = Circuit(2, tuple([(prep,)] + [(g,) for g in body]), measured=(0, 1))
    if config.cnot_mode == "decomposed":
        circ = expand_cnots(circ)
        # prep X is one layer; each CNOT expands to CR + (SX, RZ) = 2 layers
        layers = tuple(1 + 2 * c for c in counts)
    else:
        layers = tuple(1 + c for c in counts)
    return circ, layers, counts


def noisy_ensemble(
    scheduled: ScheduledCircuit,
    config: ExperimentConfig,
    checkpoint_layers: tuple[int, ...],
    run_index: int,
):
    run_cfg = RunConfig(
        shots=config.shots,
        master_seed=config.seed,
        estimator=config.estimator,
        cnot_mode=config.cnot_mode,
        run_index=run_index,
        checkpoints=checkpoint_layers,
    )
    return run_shots(scheduled, run_cfg)


def noisy_backend_run(
    scheduled: ScheduledCircuit,
    config: ExperimentConfig,
    checkpoint_layers: tuple[int, ...],
    run_index: int,
) -> np.ndarray:
    """(n_checkpoints, 2**n) outcome distributions for one run."""
    result = noisy_ensemble(scheduled, config, checkpoint_layers, run_index)
    if config.estimator == "weighted":
        return result.distributions
    return result.counts / result.counts.sum(axis=1, keepdims=True)


def _channel_checkpoint_probs(
    scheduled: ScheduledCircuit, checkpoint_layers: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """(readout distributions, pre-readout state diagonals) per checkpoint."""
    series = run_channel_sim(scheduled, scheduled.params)
    dim = 2**scheduled.n_qubits
    initial = np.zeros((dim, dim), dtype=complex)
    initial[0, 0] = 1.0
    probs, diags = [], []
    for c in checkpoint_layers:
        rho = series[c - 1] if c > 0 else initial
        diags.append(np.real(np.diag(rho)).copy())
        out = rho
        for q in scheduled.measured:
            out = apply_channel(out, bitflip_channel(scheduled.params.qubits[q].p_readout), (q,))
        p = np.real(np.diag(out)).clip(min=0.0)
        probs.append(p / p.sum())
    return np.asarray(probs), np.asarray(diags)


def channel_backend_run(
    scheduled: ScheduledCircuit,
    config: ExperimentConfig,
    checkpoint_layers: tuple[int, ...],
    run_index: int,
    exact_probs: np.ndarray | None = None,
) -> np.ndarray:
    """Finite-shot sample of the exact channel-simulator distributions."""
    if exact_probs is None:
        exact_probs = _channel_checkpoint_probs(scheduled, checkpoint_layers)[0]
    gen = RngStream(config.seed, stream_index=_CHANNEL_STREAM_BASE + run_index).generator
    out = np.empty_like(exact_probs)
    for j, p in enumerate(exact_probs):
        counts = gen.multinomial(config.shots, p / p.sum())
        out[j] = counts / config.shots
    return out


def _layer_noise_terms(layer, params: DeviceParams, n_qubits: int) -> tuple[LindbladTerm, ...]:
    """Full-register jump terms active during one uniform layer:
    always-on relaxation per qubit plus the driven gates' depolarising
    sets."""
    duration = max((g.duration for g in layer.gates), default=0.0)
    terms: list[LindbladTerm] = []
    for q in range(n_qubits):
        qb = params.qubits[q]
        gamma1, gamma_pd = relaxation_rates(qb.t1_s, qb.t2_s)
        terms.append(LindbladTerm.from_rate(embed_operator(DECAY, n_qubits, (q,)), gamma1, duration))
        terms.append(LindbladTerm.from_rate(embed_operator(PAULI_Z, n_qubits, (q,)), gamma_pd / 4.0, duration))
    for g in layer.gates:
        if g.kind in ("RZ", "IDLE") or (g.duration or 0.0) == 0.0:
            continue
        if len(g.qubits) == 1:
            rate = depolarizing_rate(params.p_1q, g.duration)
            for pauli in (PAULI_X, PAULI_Y, PAULI_Z):
                terms.append(
                    LindbladTerm.from_rate(embed_operator(pauli, n_qubits, g.qubits), rate, g.duration)
                )
        else:
            rate = two_qubit_depolarizing_rate(params.p_2q, g.duration)
            for pauli in TWO_QUBIT_PAULIS:
                terms.append(
                    LindbladTerm.from_rate(embed_operator(pauli, n_qubits, g.qubits), rate, g.duration)
                )
    return tuple(terms)


def lindblad_reference(
    scheduled: ScheduledCircuit,
    checkpoint_layers: tuple[int, ...],
    steps_per_segment: int = _LINDBLAD_STEPS_PER_SEGMENT,
) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Integrate the master equation along the scheduled circuit.

    Layers must be uniform in duration (true for the repeat experiments
    and decomposed circuits).  Returns (distributions, rho at every
    checkpoint, times).  Readout bitflips are applied to the
    distribution only, never to the running state.
    """
    n = scheduled.n_qubits
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    blocks: list[tuple[np.ndarray, float, tuple]] = []
    for layer in scheduled.layers:
        durations = {g.duration for g in layer.gates if g.kind != "RZ" and (g.duration or 0) > 0}
        if len(durations) > 1:
            raise ValueError("lindblad reference requires uniform layer durations")
        duration = layer.duration
        h = np.zeros((dim, dim), dtype=complex)
        for g in layer.gates:
            # RZ is folded into the state directly; idles carry no drive
            if g.kind in ("RZ", "IDLE") or (g.duration or 0.0) == 0.0:
                continue
            h += embed_operator(drive_generator(g), n, g.qubits) / g.duration
        terms = _layer_noise_terms(layer, scheduled.params, n)
        blocks.append((h, duration, terms))

    times_out = [0.0]
    states = [rho.copy()]
    t = 0.0
    for layer, (h, duration, terms) in zip(scheduled.layers, blocks):
        # apply virtual RZ frames first (zero duration)
        for g in layer.gates:
            if g.kind == "RZ":
                u = embed_operator(ideal_unitary(g), n, g.qubits)
                rho = u @ rho @ u.conj().T
        if duration > 0.0:
            problem = LindbladProblem(hamiltonians=((h, duration),), terms=terms, rho0=rho)
            _, segment_states = solve(problem, duration / steps_per_segment)
            rho = segment_states[-1]
            t += duration
        times_out.append(t)
        states.append(rho.copy())

    dists = []
    rhos = []
    for c in checkpoint_layers:
        rho_c = states[c]
        rhos.append(rho_c)
        out = rho_c
        for q in scheduled.measured:
            out = apply_channel(out, bitflip_channel(scheduled.params.qubits[q].p_readout), (q,))
        p = np.real(np.diag(out)).clip(min=0.0)
        dists.append(p / p.sum())
    return np.asarray(dists), rhos, np.asarray([times_out[c] for c in checkpoint_layers])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    gate_counts: tuple[int, ...]
    times: np.ndarray
    lindblad_dists: np.ndarray | None
    lindblad_rhos: list[np.ndarray] | None
    noisy_dists: np.ndarray | None  # (runs, n_cp, dim)
    channel_dists: np.ndarray | None
    h_noisy: np.ndarray | None  # (runs, n_cp)
    h_channel: np.ndarray | None
    mean_h_noisy: np.ndarray | None = None
    std_h_noisy: np.ndarray | None = None
    mean_h_channel: np.ndarray | None = None
    std_h_channel: np.ndarray | None = None
    improvement: np.ndarray | None = None
    noisy_densities: np.ndarray | None = None  # run 0 average outer products
    channel_state_diags: np.ndarray | None = None  # pre-readout diagonals


def _noisy_task(args):
    scheduled, config, layers, run_index = args
    result = noisy_ensemble(scheduled, config, layers, run_index)
    if config.estimator == "weighted":
        dists = result.distributions
    else:
        dists = result.counts / result.counts.sum(axis=1, keepdims=True)
    return dists, (result.densities if run_index == 0 else None)


def _channel_task(args):
    scheduled, config, layers, run_index, exact = args
    return channel_backend_run(scheduled, config, layers, run_index, exact)


def run_compare(config: ExperimentConfig) -> ExperimentResult:
    """Run the selected backends and compute Hellinger series against the
    Lindblad reference (which is always computed; it is the yardstick)."""
    circuit, layers, counts = build_experiment_circuit(config)
    scheduled = schedule_layers(circuit, config.device)
    lb_dists, lb_rhos, times = lindblad_reference(scheduled, layers)

    noisy = channel = h_ng = h_ch = densities = state_diags = None
    if "noisy_gates" in config.backends:
        tasks = [(scheduled, config, layers, r) for r in range(config.runs)]
        outs = _map_tasks(_noisy_task, tasks, config.parallel)
        noisy = np.asarray([o[0] for o in outs])
        densities = outs[0][1]
        h_ng = np.asarray(
            [[hellinger(noisy[r, j], lb_dists[j]) for j in range(len(layers))] for r in range(config.runs)]
        )
    if "channel" in config.backends:
        exact, state_diags = _channel_checkpoint_probs(scheduled, layers)
        tasks = [(scheduled, config, layers, r, exact) for r in range(config.runs)]
        channel = np.asarray(_map_tasks(_channel_task, tasks, config.parallel))
        h_ch = np.asarray(
            [[hellinger(channel[r, j], lb_dists[j]) for j in range(len(layers))] for r in range(config.runs)]
        )

    result = ExperimentResult(
        config=config,
        gate_counts=counts,
        times=times,
        lindblad_dists=lb_dists,
        lindblad_rhos=lb_rhos,
        noisy_dists=noisy,
        channel_dists=channel,
        h_noisy=h_ng,
        h_channel=h_ch,
        noisy_densities=densities,
        channel_state_diags=state_diags,
    )
    if h_ng is not None:
        result.mean_h_noisy, result.std_h_noisy = mean_std_over_runs(h_ng)
    if h_ch is not None:
        result.mean_h_channel, result.std_h_channel = mean_std_over_runs(h_ch)
    if h_ng is not None and h_ch is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            imp = np.abs(result.mean_h_channel - result.mean_h_noisy) / result.mean_h_channel
        result.improvement = np.where(result.mean_h_channel > 0, imp, 0.0)
    return result


def _map_tasks(fn, tasks, parallel: int):
    if parallel <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(parallel, len(tasks))) as pool:
        return list(pool.map(fn, tasks))
