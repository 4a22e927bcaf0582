import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmqc import game as gm, sim, stats, topology
from nmqc.exceptions import InputShapeError
from nmqc.sim import CountsTable


def parity_oracle(counts):
    total = sum(counts.counts.values())
    return sum((-1) ** key.count("1") * c for key, c in counts.counts.items()) / total


count_tables = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.integers(0, 50), min_size=1 << n, max_size=1 << n)
    .filter(lambda v: sum(v) > 0)
    .map(lambda v: CountsTable.from_vector(np.array(v), n))
)


def exact_counts(game, circuit, noise, shots, seed):
    table = game.settings_table()
    rng = np.random.default_rng(seed)
    out = {}
    for x in game.support():
        p = sim.exact_setting_distribution(circuit, gm.setting_angles(game, table[x]), noise)
        out[int(x)] = sim.sample_distribution(p, shots, rng)
    return out


def exact_beta(game, circuit, noise):
    table = game.settings_table()
    est = {int(x): stats.expectation_from_distribution(
        sim.exact_setting_distribution(circuit, gm.setting_angles(game, table[x]), noise))
        for x in game.support()}
    return stats.bell_value(game, est).beta


def circuit_for(game):
    g = topology.load_graph()
    return topology.schedule_cnots(topology.enumerate_configs(g, game.qubits)[0], g)


class TestExpectation:
    def test_examples(self):
        assert stats.expectation_from_counts(CountsTable(2, {"00": 50, "11": 50})) == 1.0
        assert stats.expectation_from_counts(CountsTable(2, {"01": 30, "10": 70})) == -1.0
        assert stats.expectation_from_counts(CountsTable(2, {"00": 75, "01": 25})) == 0.5

    def test_empty(self):
        with pytest.raises(InputShapeError):
            stats.expectation_from_counts(CountsTable(2, {}))

    @settings(max_examples=80, deadline=None)
    @given(count_tables)
    def test_bounded_and_matches_oracle(self, counts):
        e = stats.expectation_from_counts(counts)
        assert -1 <= e <= 1
        assert e == pytest.approx(parity_oracle(counts), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(count_tables, st.randoms(use_true_random=False))
    def test_invariant_under_parity_preserving_relabel(self, counts, rnd):
        n = counts.n_qubits
        perm = list(range(n))
        rnd.shuffle(perm)
        permuted = {"".join(k[p] for p in perm): v for k, v in counts.counts.items()}
        assert stats.expectation_from_counts(CountsTable(n, permuted)) == pytest.approx(
            stats.expectation_from_counts(counts))

    def test_estimate_range(self):
        with pytest.raises(InputShapeError):
            stats.ExpectationEstimate(1.5, 10, "XX", 0)


class TestBellValue:
    def test_nand2_perfect(self):
        game = gm.standard_game("NAND2")
        weights = game.signed_weights()
        est = {int(x): float(np.sign(weights[x])) for x in game.support()}
        b = stats.bell_value(game, est)
        assert b.beta == pytest.approx(1.0)
        assert b.success_prob == pytest.approx(1.0)

    def test_zero_correlations(self):
        game = gm.standard_game("OR3")
        b = stats.bell_value(game, {int(x): 0.0 for x in game.support()})
        assert b.beta == 0.0 and b.success_prob == 0.5

    def test_missing_input(self):
        with pytest.raises(InputShapeError):
            stats.bell_value(gm.standard_game("NAND2"), {0: 1.0})

    def test_estimates_kept(self):
        game = gm.standard_game("NAND2")
        est = {int(x): stats.ExpectationEstimate(0.5, 10, "XX", int(x)) for x in game.support()}
        assert len(stats.bell_value(game, est).per_input) == len(game.support())

    @pytest.mark.parametrize("name", gm.STANDARD_GAMES)
    def test_exact_simulation_equals_ghz_value(self, name):
        game = gm.standard_game(name)
        assert exact_beta(game, circuit_for(game), sim.NOISELESS) == pytest.approx(gm.ghz_value(game), abs=1e-12)

    def test_from_counts(self):
        game = gm.standard_game("H3")
        counts = exact_counts(game, circuit_for(game), sim.NOISELESS, 200, 0)
        assert stats.bell_from_counts(game, counts).beta == pytest.approx(1.0)


class TestBootstrap:
    def test_deterministic_counts_give_zero_width(self):
        game = gm.standard_game("H3")
        counts = exact_counts(game, circuit_for(game), sim.NOISELESS, 500, 0)
        low, high = stats.bootstrap_ci(counts, game, 200, seed=1)
        assert low == high == pytest.approx(1.0)

    def test_reproducible(self):
        game = gm.standard_game("NAND2")
        noise = sim.NoiseModel.symmetric(game.qubits, 0.05)
        counts = exact_counts(game, circuit_for(game), noise, 300, 2)
        assert stats.bootstrap_ci(counts, game, seed=9) == stats.bootstrap_ci(counts, game, seed=9)

    def test_validation(self):
        game = gm.standard_game("NAND2")
        counts = exact_counts(game, circuit_for(game), sim.NOISELESS, 10, 0)
        with pytest.raises(InputShapeError):
            stats.bootstrap_ci(counts, game, resamples=50)
        with pytest.raises(InputShapeError):
            stats.bootstrap_ci(counts, game, level=1.0)
        with pytest.raises(InputShapeError):
            stats.bootstrap_ci({0: counts[0]}, game)

    def test_width_shrinks_with_shots(self):
        game = gm.standard_game("NAND2")
        circuit = circuit_for(game)
        noise = sim.NoiseModel.symmetric(game.qubits, 0.1)
        widths = {}
        for shots in (100, 10_000):
            w = []
            for rep in range(20):
                low, high = stats.bootstrap_ci(exact_counts(game, circuit, noise, shots, rep), game, 200, seed=rep)
                w.append(high - low)
            widths[shots] = np.mean(w)
        # sqrt(shots) scaling predicts a factor of 10
        assert widths[10_000] < widths[100] / 5

    @pytest.mark.slow
    def test_coverage(self):
        game = gm.standard_game("NAND2")
        circuit = circuit_for(game)
        noise = sim.NoiseModel.symmetric(game.qubits, 0.1)
        truth = exact_beta(game, circuit, noise)
        hits = 0
        reps = 200
        for rep in range(reps):
            low, high = stats.bootstrap_ci(exact_counts(game, circuit, noise, 400, rep), game, 400, 0.9, seed=rep)
            hits += low <= truth <= high
        # nominal 90%; binomial sd is about 2 points
        assert 0.84 <= hits / reps <= 0.96

    def test_counts_per_input(self):
        game = gm.standard_game("NAND2")
        counts = exact_counts(game, circuit_for(game), sim.NOISELESS, 10, 0)
        assert stats.counts_per_input(game, counts) is counts
        with pytest.raises(InputShapeError):
            stats.counts_per_input(game, {})
