"""Support-boundary solvers against Monte Carlo extreme eigenvalues."""

import numpy as np
import pytest

from conftest import crandn, onesided_product_eigs, steering
from mimospectra import rmt
from mimospectra.errors import ConfigError

M, N, P, K, L = 400, 1000, 200, 5, 4
P_S, P_I = 0.1, 0.025


def _bracket(support, samples, slack=0.10):
    """Every sample inside the slack-dilated support union."""
    return bool(np.all(support.contains(samples, slack=slack)))


class TestSupportOneSided:
    def test_zero_scale_rejected(self):
        with pytest.raises(ConfigError):
            rmt.OneSidedParams(scale=0.0, inner_dim=5, m=M, n=N, p=P)

    @pytest.mark.parametrize("scale,inner", [(P_S, K), (P_I, K * (L - 1))])
    def test_brackets_monte_carlo_spectra(self, scale, inner):
        params = rmt.OneSidedParams(scale=scale, inner_dim=inner, m=M, n=N, p=P)
        sup = rmt.support_onesided(params)
        assert len(sup.intervals) == 1
        rng = np.random.default_rng(inner)
        samples = np.concatenate([
            onesided_product_eigs(rng, scale, inner, M, N, P, physical=True)
            for _ in range(50)])
        assert _bracket(sup, samples)

    def test_mp_sanity_via_tiny_scale_structure(self):
        # a single interval with positive endpoints ordered
        sup = rmt.support_onesided(rmt.OneSidedParams(scale=1.0, inner_dim=50,
                                                      m=500, n=500, p=500))
        (lo, hi), = sup.intervals
        assert 0 < lo < hi


class TestSupportDoubleSided:
    def test_two_intervals_match_empirical_edges(self):
        params = rmt.DoubleSidedParams(num_users=K, num_cells=L, num_antennas=M,
                                       block_length=N, num_aoas=P,
                                       p_signal=P_S, p_interference=P_I)
        sup, report = rmt.support_double_sided(params)
        assert len(sup.intervals) == 2
        assert not report.suspect
        rng = np.random.default_rng(0)
        d = np.concatenate([np.full(K, P_S), np.full(K * (L - 1), P_I)])
        lows, highs = [], []
        for _ in range(40):
            s = steering(rng, M, P)
            sh = s @ crandn(rng, P, K * L)
            x = crandn(rng, K * L, N)
            xd = np.sqrt(d)[:, None] * x
            lam = np.sort(np.linalg.eigvals(
                (xd @ xd.conj().T / N) @ (sh.conj().T @ sh / M)).real)
            lows.append(lam[:K * (L - 1)])
            highs.append(lam[K * (L - 1):])
        lows, highs = np.array(lows), np.array(highs)
        (lo1, hi1), (lo2, hi2) = sup.intervals
        for endpoint, empirical in ((lo1, lows.min()), (hi1, lows.max()),
                                    (lo2, highs.min()), (hi2, highs.max())):
            assert abs(endpoint - empirical) / empirical < 0.10

    def test_equal_powers_single_interval(self):
        params = rmt.DoubleSidedParams(num_users=K, num_cells=L, num_antennas=M,
                                       block_length=N, num_aoas=P,
                                       p_signal=P_S, p_interference=P_S)
        sup, _ = rmt.support_double_sided(params)
        assert len(sup.intervals) == 1

    def test_pathological_ratios_raise_flags(self):
        params = rmt.DoubleSidedParams(num_users=10, num_cells=1, num_antennas=10,
                                       block_length=10, num_aoas=10,
                                       p_signal=0.1, p_interference=0.1)
        # alpha = eta = gamma = 1: both validity ratios equal 3
        report = rmt.TruncationReport(
            ratio_triple=(params.alpha + params.eta + params.gamma)
            / (params.alpha * params.eta * params.gamma),
            ratio_pairwise=(params.alpha + params.eta + params.gamma)
            / (params.alpha * params.gamma + params.alpha * params.eta
               + params.eta * params.gamma))
        assert report.ratio_triple == pytest.approx(3.0)
        assert report.ratio_pairwise == pytest.approx(1.0)
        assert report.suspect and len(report.flags) == 2

    def test_gap_monotone_in_aoa_count(self):
        prev = -1.0
        for p_count in (25, 50, 100, 200):
            params = rmt.DoubleSidedParams(num_users=K, num_cells=L,
                                           num_antennas=M, block_length=N,
                                           num_aoas=p_count, p_signal=P_S,
                                           p_interference=P_I)
            sup, _ = rmt.support_double_sided(params)
            gap = sup.gap_widths[0] if sup.gap_widths else 0.0
            assert gap >= prev
            prev = gap


class TestSupportDistinct:
    def test_brackets_block_interference_spectra(self):
        # pooled empirical bulk edges within 10% of the analytic endpoints
        # (physical steering drags the top edge ~9% above the asymptote at
        # these sizes)
        sup = rmt.support_distinct(K, L, M, N, P, P_I)
        assert len(sup.intervals) == 1
        rng = np.random.default_rng(1)
        kk = K * (L - 1)
        samples = []
        for _ in range(50):
            s_all = [steering(rng, M, P) for _ in range(L - 1)]
            h_blocks = [crandn(rng, P, K) for _ in range(L - 1)]
            comp = np.concatenate([s @ h for s, h in zip(s_all, h_blocks)], axis=1)
            x = crandn(rng, kk, N)
            lam = np.linalg.eigvals(
                (x @ x.conj().T * P_I / N) @ (comp.conj().T @ comp / M)).real
            samples.append(np.sort(lam))
        samples = np.concatenate(samples)
        (lo, hi), = sup.intervals
        assert abs(lo - samples.min()) / samples.min() < 0.10
        assert abs(hi - samples.max()) / samples.max() < 0.10
        assert np.mean(sup.contains(samples, slack=0.10)) > 0.99

    def test_matches_onesided_reduction_for_two_cells(self):
        # one interfering cell is exactly the one-power law
        sup_d = rmt.support_distinct(K, 2, M, N, P, P_I)
        sup_1 = rmt.support_onesided(rmt.OneSidedParams(scale=P_I, inner_dim=K,
                                                        m=M, n=N, p=P))
        (a, b), = sup_d.intervals
        (c, d), = sup_1.intervals
        # both laws share the same nonzero bulk (one carries the zero atom);
        # the two scans locate its edges on different curves, so agreement is
        # limited by extremum-refinement resolution
        assert a == pytest.approx(c, rel=1e-3)
        assert b == pytest.approx(d, rel=1e-3)

    def test_fewer_interferers_narrower_bulk(self):
        sup2 = rmt.support_distinct(K, 2, M, N, P, P_I)
        sup4 = rmt.support_distinct(K, 4, M, N, P, P_I)
        (a2, b2), = sup2.intervals
        (a4, b4), = sup4.intervals
        assert a4 < a2 < b2 < b4

    def test_narrow_grid_warns(self):
        grid = rmt.SupportGrid(x_min=1e-6, x_max=3.0, points=2000)
        with pytest.warns(UserWarning, match="x-grid too narrow"):
            rmt.support_distinct(K, L, M, N, P, P_I, grid=grid)


class TestSupportIid:
    def test_brackets_monte_carlo(self):
        sup = rmt.support_iid(P_S, K / M, K / N)
        rng = np.random.default_rng(2)
        samples = []
        for _ in range(50):
            h = crandn(rng, M, K)
            x = crandn(rng, K, N)
            lam = np.linalg.eigvals((h.conj().T @ h / M) @ (x @ x.conj().T / N)).real
            samples.append(np.sort(lam) * P_S)
        assert _bracket(sup, np.concatenate(samples))

    def test_narrower_than_physical_bulk(self):
        # the finite-AoA law spreads strictly wider on both sides
        sup_iid = rmt.support_iid(P_S, K / M, K / N)
        sup_phy = rmt.support_onesided(rmt.OneSidedParams(scale=P_S, inner_dim=K,
                                                          m=M, n=N, p=P))
        (a_i, b_i), = sup_iid.intervals
        (a_p, b_p), = sup_phy.intervals
        assert a_p < a_i and b_i < b_p


class TestAntennaSaturationLimit:
    def test_huge_antenna_surrogate_matches_iid_with_p_antennas(self):
        # adding antennas beyond the AoA count pins the spectrum to the
        # rich-scattering law with m set to the AoA count
        # 50*P leaves an 8%-of-peak edge residual; 500*P is inside 5%
        p_count = 200
        surrogate = rmt.OneSidedParams(scale=P_S, inner_dim=K, m=500 * p_count,
                                       n=N, p=p_count)
        xs = np.linspace(0.05, 0.2, 250)
        dens_phys = rmt.density_from_stieltjes(
            lambda s: rmt.stieltjes_onesided(s, surrogate), xs, eps=1e-4)
        dens_iid = rmt.density_from_stieltjes(
            lambda s: rmt.stieltjes_iid_limit(s, P_S, K / p_count, K / N),
            xs, eps=1e-4)
        assert np.abs(dens_phys - dens_iid).max() < 0.05 * dens_iid.max()
