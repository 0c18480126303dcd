import numpy as np
import pytest

from noisygates.engine import schedule_layers
from noisygates.experiments import (
    ExperimentConfig,
    build_experiment_circuit,
    channel_backend_run,
    checkpoint_gate_counts,
    lindblad_reference,
    run_compare,
)
from noisygates.noise_model import DeviceParams, QubitParams

DESK = DeviceParams(
    qubits=(
        QubitParams(t1_s=100e-6, t2_s=80e-6, p_readout=0.02),
        QubitParams(t1_s=90e-6, t2_s=70e-6, p_readout=0.025),
    ),
    t_1q_s=35e-9,
    t_2q_s=300e-9,
    p_1q=5e-4,
    p_2q=0.04,
)


def small_config(experiment="repeat_x", **kw):
    defaults = dict(
        experiment=experiment,
        device=DESK,
        repetitions=40,
        checkpoints=8,
        shots=512,
        runs=3,
        seed=5,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestCheckpoints:
    def test_even_spacing(self):
        assert checkpoint_gate_counts(500, 50) == tuple(range(10, 501, 10))

    def test_end_included(self):
        counts = checkpoint_gate_counts(97, 10)
        assert counts[-1] == 97

    def test_validation(self):
        with pytest.raises(ValueError):
            small_config(checkpoints=100, repetitions=40)


class TestCircuitBuilders:
    def test_repeat_x_shape(self):
        circ, layers, counts = build_experiment_circuit(small_config())
        assert circ.n_qubits == 1
        assert circ.n_layers == 40
        assert layers == counts

    def test_repeat_cr_has_prep(self):
        circ, layers, counts = build_experiment_circuit(small_config("repeat_cr"))
        assert circ.n_qubits == 2
        assert circ.layers[0][0].kind == "X"
        assert layers[0] == counts[0] + 1

    def test_repeat_cnot_measured(self):
        circ, _, _ = build_experiment_circuit(small_config("repeat_cnot"))
        assert circ.measured == (0, 1)

    def test_decomposed_cnot_layers(self):
        cfg = small_config("repeat_cnot", cnot_mode="decomposed")
        circ, layers, counts = build_experiment_circuit(cfg)
        assert layers[-1] == 1 + 2 * counts[-1]


class TestLindbladReference:
    def test_prep_reaches_one_zero(self):
        cfg = small_config("repeat_cr", repetitions=2, checkpoints=1)
        circ, _, _ = build_experiment_circuit(cfg)
        sched = schedule_layers(circ, DESK)
        dists, rhos, _ = lindblad_reference(sched, (1,))
        # after the prep X the register sits in |10> up to gate noise
        assert dists[0][2] > 0.99

    def test_measured_experiment_includes_readout_noise(self):
        cfg = small_config("repeat_cnot", repetitions=2, checkpoints=1)
        circ, layers, _ = build_experiment_circuit(cfg)
        sched = schedule_layers(circ, DESK)
        dists, _, _ = lindblad_reference(sched, (1,))
        bare = schedule_layers(
            build_experiment_circuit(small_config("repeat_cr", repetitions=2, checkpoints=1))[0], DESK
        )
        bare_dists, _, _ = lindblad_reference(bare, (1,))
        # readout bitflips pull weight off the |10> peak
        assert dists[0][2] < bare_dists[0][2]


class TestChannelBackend:
    def test_sampled_distribution_normalised(self):
        cfg = small_config()
        circ, layers, _ = build_experiment_circuit(cfg)
        sched = schedule_layers(circ, DESK)
        dists = channel_backend_run(sched, cfg, layers, run_index=0)
        assert np.allclose(dists.sum(axis=1), 1.0)

    def test_run_index_varies_sampling(self):
        cfg = small_config()
        circ, layers, _ = build_experiment_circuit(cfg)
        sched = schedule_layers(circ, DESK)
        a = channel_backend_run(sched, cfg, layers, run_index=0)
        b = channel_backend_run(sched, cfg, layers, run_index=1)
        assert not np.array_equal(a, b)


class TestRunCompare:
    def test_shapes_and_determinism(self):
        cfg = small_config()
        a = run_compare(cfg)
        b = run_compare(cfg)
        n_cp = len(a.gate_counts)
        assert a.noisy_dists.shape == (cfg.runs, n_cp, 2)
        assert a.channel_dists.shape == (cfg.runs, n_cp, 2)
        assert a.h_noisy.shape == (cfg.runs, n_cp)
        assert np.array_equal(a.noisy_dists, b.noisy_dists)
        assert np.array_equal(a.h_channel, b.h_channel)
        assert a.improvement is not None

    def test_backend_subset(self):
        cfg = small_config(backends=("lindblad",))
        result = run_compare(cfg)
        assert result.noisy_dists is None
        assert result.channel_dists is None
        assert result.improvement is None

    def test_unweighted_estimator(self):
        cfg = small_config(estimator="unweighted", shots=2048)
        result = run_compare(cfg)
        assert np.allclose(result.noisy_dists.sum(axis=2), 1.0)

    def test_decomposed_matches_direct_at_small_error(self):
        gentle = DeviceParams(
            qubits=(
                QubitParams(t1_s=500e-6, t2_s=400e-6, p_readout=0.0),
                QubitParams(t1_s=500e-6, t2_s=400e-6, p_readout=0.0),
            ),
            t_1q_s=35e-9,
            t_2q_s=300e-9,
            p_1q=1e-5,
            p_2q=1e-3,
        )
        dists = {}
        for mode in ("direct", "decomposed"):
            cfg = small_config(
                "repeat_cnot", device=gentle, repetitions=10, checkpoints=1,
                shots=8192, runs=1, cnot_mode=mode,
            )
            dists[mode] = run_compare(cfg).noisy_dists[0, -1]
        # different noise placements agree up to combined MC + O(p) error
        assert np.abs(dists["direct"] - dists["decomposed"]).max() < 0.02
