import math

import numpy as np
import pytest

from ecsdist.errors import DomainError, TruncationError
from ecsdist.fock import (
    apply_loss_channel,
    cat_fock,
    click_weights,
    coherent_fock,
    detection_matrix,
    fock_beamsplitter,
    herald_distribution,
    loss_kraus,
    oracle_run,
    poisson_tail,
)
from ecsdist.schemes import SchemeParams, new_simulate, original_simulate

FIG3_ALPHA1 = SchemeParams(1.0, 0.1, 0.5, 0.5)


def pair(u, a, b, cutoff):
    va, vb = coherent_fock(a, cutoff).vector, coherent_fock(b, cutoff).vector
    return (u @ np.kron(va, vb)).reshape(cutoff + 1, cutoff + 1)


class TestStates:
    def test_overlap_matches_closed_form(self):
        a, b = coherent_fock(1, 40).vector, coherent_fock(-1, 40).vector
        assert abs(np.vdot(a, b) - math.exp(-2)) < 1e-10

    def test_norm_near_one(self):
        assert abs(coherent_fock(2, 40).norm_sq() - 1) < 1e-12

    @pytest.mark.parametrize("beta,cutoff", [(2.0, 12), (1.0, 8), (2.5, 25)])
    def test_deficit_is_poisson_tail(self, beta, cutoff):
        s = coherent_fock(beta, cutoff, max_tail=1.0)
        assert abs((1 - s.norm_sq()) - poisson_tail(beta**2, cutoff)) < 1e-13

    def test_refuses_heavy_truncation(self):
        with pytest.raises(TruncationError):
            coherent_fock(3.0, 10)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_cat_normalized(self, sign):
        assert cat_fock(1.3, sign, 40).norm_sq() == pytest.approx(1, abs=1e-12)

    def test_cat_parity(self):
        v = cat_fock(1.0, -1, 30).vector
        assert np.all(v[0::2] == 0)


class TestBeamSplitter:
    def test_unitary_on_retained_sectors(self):
        c = 12
        u = fock_beamsplitter(0.3, c)
        d = c + 1
        totals = np.add.outer(np.arange(d), np.arange(d)).ravel()
        low = totals <= c
        sub = u[np.ix_(low, low)]
        np.testing.assert_allclose(sub.T @ sub, np.eye(low.sum()), atol=1e-10)

    def test_sector_blocks_exactly_zero(self):
        c = 10
        u = fock_beamsplitter(0.45, c)
        totals = np.add.outer(np.arange(c + 1), np.arange(c + 1)).ravel()
        off = totals[:, None] != totals[None, :]
        assert np.all(u[off] == 0)

    def test_commutes_with_photon_number(self):
        c = 10
        u = fock_beamsplitter(0.7, c)
        n = np.diag(np.add.outer(np.arange(c + 1), np.arange(c + 1)).ravel().astype(float))
        np.testing.assert_allclose(u @ n, n @ u, atol=1e-12)

    def test_full_transmission(self):
        np.testing.assert_allclose(fock_beamsplitter(1.0, 8), np.eye(81), atol=1e-15)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.4])
    def test_balanced_splitter_on_coherent_pairs(self, alpha):
        c = 40
        u = fock_beamsplitter(0.5, c)
        expected = np.outer(coherent_fock(math.sqrt(2) * alpha, c).vector, coherent_fock(0, c).vector)
        np.testing.assert_allclose(pair(u, alpha, alpha, c), expected, atol=1e-12)
        expected = np.outer(coherent_fock(0, c).vector, coherent_fock(math.sqrt(2) * alpha, c).vector)
        np.testing.assert_allclose(pair(u, -alpha, alpha, c), expected, atol=1e-12)

    def test_rejects_bad_transmissivity(self):
        with pytest.raises(DomainError):
            fock_beamsplitter(1.2, 5)


class TestLoss:
    def test_trace_preserving(self):
        v = cat_fock(1.2, 1, 30).vector
        out = apply_loss_channel(np.outer(v, v.conj()), 0.35)
        assert np.trace(out).real == pytest.approx(1, abs=1e-12)

    def test_coherent_stays_coherent(self):
        v = coherent_fock(1.5, 40).vector
        out = apply_loss_channel(np.outer(v, v.conj()), 0.36)
        w = coherent_fock(1.5 * 0.8, 40).vector
        np.testing.assert_allclose(out, np.outer(w, w.conj()), atol=1e-12)

    @pytest.mark.parametrize("alpha,eta", [(1.0, 0.3), (1.8, 0.5)])
    def test_environment_sum_resums_to_hyperbolics(self, alpha, eta):
        # environment photon number a contributes (-eta alpha^2)^a / a! e^{-eta alpha^2}
        c = 40
        kraus = loss_kraus(eta, c)
        dyad = np.outer(coherent_fock(alpha, c).vector, coherent_fock(-alpha, c).vector.conj())
        terms = np.array([np.trace(k @ dyad @ k.T) for k in kraus])
        x = eta * alpha**2
        overlap = math.exp(-2 * (1 - eta) * alpha**2)
        assert terms[0::2].sum().real == pytest.approx(overlap * math.exp(-x) * math.cosh(x), abs=1e-12)
        assert terms[1::2].sum().real == pytest.approx(-overlap * math.exp(-x) * math.sinh(x), abs=1e-12)
        assert terms.sum().real == pytest.approx(math.exp(-2 * alpha**2), abs=1e-12)

    def test_detection_matrix_stochastic(self):
        b = detection_matrix(0.3, 20)
        np.testing.assert_allclose(b.sum(axis=0), 1, atol=1e-13)
        assert click_weights(1.0, 10) == pytest.approx(np.zeros(11))
        assert click_weights(0.0, 10)[0] == 0 and np.all(click_weights(0.0, 10)[1:] == 1)


class TestOracle:
    @pytest.mark.parametrize("parity", ["even", "odd"])
    def test_original_agrees_with_engine(self, parity):
        o = oracle_run(FIG3_ALPHA1, "original", parity)
        e = original_simulate(FIG3_ALPHA1, parity)
        tol = max(1e-6, o.truncation_bound)
        assert abs(o.fidelity - e.fidelity) <= tol
        assert abs(o.probability - e.probability) <= tol

    def test_new_agrees_with_engine(self):
        o = oracle_run(FIG3_ALPHA1, "new")
        e = new_simulate(FIG3_ALPHA1)
        tol = max(1e-6, o.truncation_bound)
        assert abs(o.fidelity - e.fidelity) <= tol
        assert abs(o.probability - e.probability) <= tol

    @pytest.mark.parametrize("scheme,parity", [("original", "even"), ("original", "odd"), ("new", None)])
    def test_noiseless_fidelity_one(self, scheme, parity):
        o = oracle_run(SchemeParams(1.0, 0.01, 0.0, 0.0), scheme, parity, cutoff=30)
        assert abs(o.fidelity - 1) <= o.truncation_bound

    @pytest.mark.parametrize("scheme", ["original", "new"])
    def test_outcome_probabilities_complete(self, scheme):
        p = SchemeParams(1.5, 0.2, 0.5, 0.3)
        q = herald_distribution(p, scheme, cutoff=30)
        assert np.all(q >= -1e-15)
        assert q.sum() == pytest.approx(1, abs=1e-10)

    def test_herald_distribution_contains_scheme_probabilities(self):
        p = SchemeParams(1.2, 0.1, 0.5, 0.5)
        q = herald_distribution(p, "original", cutoff=30)
        even = q[2::2, 0].sum() + q[0, 2::2].sum()
        assert even == pytest.approx(original_simulate(p, "even").probability, abs=1e-12)
        assert herald_distribution(p, "new", cutoff=30)[1, 1] == pytest.approx(new_simulate(p).probability, abs=1e-12)

    @pytest.mark.parametrize("scheme,parity", [("original", "odd"), ("new", None)])
    def test_doubling_cutoff_within_bound(self, scheme, parity):
        p = SchemeParams(0.8, 0.1, 0.5, 0.5)
        coarse = oracle_run(p, scheme, parity, cutoff=18)
        fine = oracle_run(p, scheme, parity, cutoff=36)
        assert abs(coarse.fidelity - fine.fidelity) < coarse.truncation_bound
        assert abs(coarse.probability - fine.probability) < coarse.truncation_bound

    def test_argument_errors(self):
        with pytest.raises(DomainError):
            oracle_run(FIG3_ALPHA1, "original")
        with pytest.raises(DomainError):
            oracle_run(FIG3_ALPHA1, "teleport")
        with pytest.raises(DomainError):
            herald_distribution(FIG3_ALPHA1, "teleport", cutoff=10)
