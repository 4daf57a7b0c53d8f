import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecsdist.coherent import coherent, ket_norm_sq, make_ecs, make_scs, vacuum
from ecsdist.errors import DegenerateStateError, DimensionError, DomainError
from ecsdist.operator import (
    CoherentOperator,
    DetectionOutcome,
    LinearNetwork,
    OutcomeKind,
    append_vacuum,
    apply_loss,
    apply_network,
    apply_outcome,
    beamsplitter,
    canonicalize,
    condition_click,
    condition_no_click,
    fidelity_with_ket,
    fock_amplitude,
    from_ket,
    identity_network,
    is_hermitian,
    loss_channel_isometry,
    op_trace,
    op_trace_complex,
    phase_shift,
    project_fock,
    project_fock_set,
    tensor,
    trace_out,
)

from conftest import kets, random_ket, random_rho

SQ2 = math.sqrt(2)


def single(coeff, ket, bra):
    return CoherentOperator([coeff], [ket], [bra])


class TestFromKet:
    def test_vacuum(self):
        rho = from_ket(vacuum())
        assert len(rho) == 1
        assert rho.coeffs[0] == 1
        assert rho.kets[0, 0] == 0 and rho.bras[0, 0] == 0

    def test_two_terms_give_four(self):
        assert len(from_ket(make_scs(1.0, "plus"))) == 4

    @given(kets())
    def test_trace_is_norm(self, psi):
        assert op_trace(from_ket(psi)) == pytest.approx(ket_norm_sq(psi), rel=1e-12, abs=1e-12)

    def test_mode_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            CoherentOperator([1, 2], [[0.0]], [[0.0]])


class TestNetworks:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_balanced_splitter_on_equal_amplitudes(self, alpha):
        out = beamsplitter(0.5, 0, 1, 2).matrix @ [alpha, alpha]
        np.testing.assert_allclose(out, [SQ2 * alpha, 0], atol=1e-15)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_balanced_splitter_on_opposite_amplitudes(self, alpha):
        out = beamsplitter(0.5, 0, 1, 2).matrix @ [-alpha, alpha]
        np.testing.assert_allclose(out, [0, SQ2 * alpha], atol=1e-15)

    def test_splitter_convention(self):
        t = 0.3
        m = beamsplitter(t, 1, 0, 3).matrix
        a = np.array([0.2, 1.0, -0.4j])
        out = m @ a
        assert out[1] == pytest.approx(math.sqrt(t) * a[1] + math.sqrt(1 - t) * a[0])
        assert out[0] == pytest.approx(-math.sqrt(1 - t) * a[1] + math.sqrt(t) * a[0])
        assert out[2] == a[2]

    def test_full_transmission_is_identity(self):
        np.testing.assert_array_equal(beamsplitter(1.0, 0, 1, 2).matrix, np.eye(2))

    def test_phase_shift(self):
        m = phase_shift(0.7, 1, 2).matrix
        assert m[1, 1] == pytest.approx(np.exp(0.7j))
        assert m[0, 0] == 1

    def test_pi_phase_is_exact(self):
        np.testing.assert_array_equal(phase_shift(math.pi, 0, 1).matrix, [[-1]])

    def test_zero_loss_appends_vacuum(self):
        net = loss_channel_isometry(0.0, 0, 2)
        assert net.matrix.shape == (3, 2)
        np.testing.assert_array_equal(net.matrix, np.eye(3)[:, :2])

    def test_loss_isometry_split(self):
        m = loss_channel_isometry(0.36, 0, 1).matrix
        np.testing.assert_allclose(m[:, 0], [0.8, 0.6], atol=1e-15)

    @pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan")])
    def test_out_of_range(self, bad):
        with pytest.raises(DomainError):
            beamsplitter(bad, 0, 1, 2)
        with pytest.raises(DomainError):
            loss_channel_isometry(bad, 0, 1)

    def test_bad_mode_index(self):
        with pytest.raises(DimensionError):
            beamsplitter(0.5, 0, 2, 2)
        with pytest.raises(DimensionError):
            beamsplitter(0.5, 1, 1, 2)

    def test_non_isometry_rejected(self):
        with pytest.raises(DomainError):
            LinearNetwork(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(DimensionError):
            LinearNetwork(np.ones((1, 2)) / SQ2)

    def test_then_applies_self_first(self):
        a, b = beamsplitter(0.3, 0, 1, 2), phase_shift(1.0, 0, 2)
        np.testing.assert_allclose(a.then(b).matrix, b.matrix @ a.matrix)


class TestApplyNetwork:
    def test_identity_is_bit_identical(self, rng):
        rho = random_rho(rng, 3)
        out = apply_network(rho, identity_network(3))
        np.testing.assert_array_equal(out.kets, rho.kets)
        np.testing.assert_array_equal(out.bras, rho.bras)
        np.testing.assert_array_equal(out.coeffs, rho.coeffs)

    def test_trace_preserved(self, rng):
        for _ in range(20):
            rho = random_rho(rng, 2)
            net = beamsplitter(rng.uniform(), 0, 1, 2).then(phase_shift(rng.uniform(0, 6), 1, 2))
            assert op_trace(apply_network(rho, net)) == pytest.approx(op_trace(rho), rel=1e-12)

    def test_inverse_roundtrip(self, rng):
        rho = random_rho(rng, 2)
        net = beamsplitter(0.37, 0, 1, 2)
        back = apply_network(apply_network(rho, net), net.inverse())
        np.testing.assert_allclose(back.kets, rho.kets, atol=1e-12)
        np.testing.assert_allclose(back.bras, rho.bras, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            apply_network(from_ket(coherent([1.0])), identity_network(2))

    def test_term_count_preserved(self, rng):
        rho = random_rho(rng, 2, terms=4)
        assert len(apply_network(rho, beamsplitter(0.5, 0, 1, 2))) == len(rho)

    def test_distributes_over_addition(self, rng):
        r1, r2 = random_rho(rng, 2), random_rho(rng, 2)
        net = beamsplitter(0.2, 1, 0, 2)
        psi = make_ecs(0.6, "plus")
        lhs = fidelity_with_ket(apply_network(r1 + r2, net), psi) * op_trace(r1 + r2)
        rhs = (
            fidelity_with_ket(apply_network(r1, net), psi) * op_trace(r1)
            + fidelity_with_ket(apply_network(r2, net), psi) * op_trace(r2)
        )
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestTraceOut:
    def test_vacuum_mode_changes_nothing(self, rng):
        rho = append_vacuum(random_rho(rng, 2))
        out = trace_out(rho, 2)
        np.testing.assert_array_equal(out.coeffs, rho.coeffs)
        assert out.mode_count == 2

    def test_trace_preserved(self, rng):
        for i in range(3):
            rho = random_rho(rng, 3)
            assert op_trace(trace_out(rho, i)) == pytest.approx(op_trace(rho), rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("alpha,eta", [(1.0, 0.3), (0.5, 0.9), (2.0, 0.05)])
    def test_loss_decoherence_factor(self, alpha, eta):
        rho = single(1.0, [alpha], [-alpha])
        out = trace_out(apply_network(rho, loss_channel_isometry(eta, 0, 1)), 1)
        assert out.coeffs[0] == pytest.approx(math.exp(-2 * eta * alpha**2), rel=1e-13)
        assert out.kets[0, 0] == pytest.approx(math.sqrt(1 - eta) * alpha)

    def test_apply_loss_matches_explicit(self):
        rho = from_ket(make_scs(1.1, "plus"))
        explicit = trace_out(apply_network(rho, loss_channel_isometry(0.4, 0, 1)), 1)
        lossy = apply_loss(rho, 0, 0.4)
        assert lossy.mode_count == 2
        np.testing.assert_allclose(trace_out(lossy, 1).coeffs, explicit.coeffs, atol=1e-15)

    def test_tracing_all_modes(self):
        rho = from_ket(make_scs(0.8, "plus"))
        assert trace_out(rho, 0).mode_count == 0
        assert op_trace(trace_out(rho, 0)) == pytest.approx(1, abs=1e-14)

    def test_bad_index(self):
        with pytest.raises(DimensionError):
            trace_out(from_ket(coherent([1.0])), 1)


class TestProjectFock:
    def test_vacuum_on_vacuum(self):
        out = project_fock(single(0.7, [0.0, 1.0], [0.0, 2.0]), 0, 0)
        assert out.coeffs[0] == 0.7

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_vacuum_ket_kills_nonzero_counts(self, n):
        out = project_fock(single(1.0, [0.0], [1.5]), 0, n)
        assert out.coeffs[0] == 0

    def test_coefficient(self):
        beta, n = 0.9 - 0.3j, 3
        out = project_fock(single(1.0, [beta], [beta]), 0, n)
        amp = math.exp(-abs(beta) ** 2 / 2) * beta**n / math.sqrt(math.factorial(n))
        assert out.coeffs[0] == pytest.approx(abs(amp) ** 2, rel=1e-13)

    def test_large_n_log_space(self):
        beta = 6.0
        for n in (20, 21, 40, 120):
            direct = math.exp(-beta**2 / 2 + n * math.log(beta) - 0.5 * math.lgamma(n + 1))
            assert fock_amplitude(np.array([beta]), n)[0] == pytest.approx(direct, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.3, 2.0])
    def test_completeness(self, alpha):
        rho = from_ket(make_scs(alpha, "minus"))
        total = sum(op_trace(project_fock(rho, 0, n)) for n in range(60))
        assert total == pytest.approx(op_trace(rho), abs=1e-12)

    def test_set_is_sum(self):
        rho = from_ket(make_ecs(1.0, "plus"))
        ns = [1, 3, 4]
        lhs = op_trace(project_fock_set(rho, 1, ns))
        assert lhs == pytest.approx(sum(op_trace(project_fock(rho, 1, n)) for n in ns), rel=1e-13)


class TestClick:
    @pytest.mark.parametrize("beta,l", [(0.3, 0.0), (1.0, 0.5), (2.0 + 1j, 0.9)])
    def test_coherent_click_probability(self, beta, l):
        rho = from_ket(coherent([beta]))
        assert op_trace(condition_click(rho, 0, l)) == pytest.approx(1 - math.exp(-(1 - l) * abs(beta) ** 2), rel=1e-13)

    def test_full_loss_never_clicks(self, rng):
        rho = random_rho(rng, 2)
        assert op_trace(condition_click(rho, 1, 1.0)) == pytest.approx(0, abs=1e-15)

    def test_povm_completeness(self, rng):
        rho = random_rho(rng, 2, scale=0.8)
        for l in (0.0, 0.3):
            both = condition_click(rho, 0, l) + condition_no_click(rho, 0, l)
            after = trace_out(trace_out(apply_loss(rho, 0, l), 2), 0)
            assert op_trace(both) == pytest.approx(op_trace(after), rel=1e-12)

    def test_click_at_most_doubles_terms(self, rng):
        rho = random_rho(rng, 2)
        assert len(condition_click(rho, 0, 0.2)) <= 2 * len(rho)

    def test_tiny_amplitude_precision(self):
        # expm1 form keeps relative precision where 1 - overlap cancels
        beta = 1e-6
        p = op_trace(condition_click(from_ket(coherent([beta])), 0))
        assert p == pytest.approx(-math.expm1(-(beta**2)), rel=1e-9)

    def test_outcome_dispatch(self):
        rho = from_ket(make_ecs(0.9, "plus"))
        assert op_trace(apply_outcome(rho, DetectionOutcome(0, "click"), 0.2)) == pytest.approx(
            op_trace(condition_click(rho, 0, 0.2))
        )
        assert op_trace(apply_outcome(rho, DetectionOutcome(0, OutcomeKind.FOCK, 2))) == pytest.approx(
            op_trace(project_fock(rho, 0, 2))
        )
        with pytest.raises(DomainError):
            DetectionOutcome(0, "fock")


class TestFidelity:
    def test_self(self):
        psi = make_ecs(1.1, "minus")
        assert fidelity_with_ket(from_ket(psi), psi) == pytest.approx(1, abs=1e-14)

    def test_orthogonal(self):
        assert fidelity_with_ket(from_ket(make_ecs(1.0, "plus")), make_ecs(1.0, "minus")) == pytest.approx(0, abs=1e-15)

    @pytest.mark.parametrize("x,alpha", [(0.1, 1.0), (0.7, 0.5), (2.0, 1.8)])
    def test_cosh_sinh_mixture(self, x, alpha):
        rho = math.cosh(x) * from_ket(make_ecs(alpha, "plus", False)) + math.sinh(x) * from_ket(
            make_ecs(alpha, "minus", False)
        )
        expected = 1 / (1 + math.tanh(x) * math.tanh(2 * alpha**2))
        assert fidelity_with_ket(rho, make_ecs(alpha, "plus")) == pytest.approx(expected, abs=1e-13)

    def test_zero_trace(self):
        rho = single(0.0, [1.0], [1.0])
        with pytest.raises(DegenerateStateError):
            fidelity_with_ket(rho, coherent([1.0]))


class TestCanonical:
    def test_merges_duplicates(self):
        rho = from_ket(make_scs(1.0, "plus", False)) + from_ket(make_scs(1.0, "minus", False))
        merged = canonicalize(rho, drop_zeros=True)
        assert len(merged) == 2
        np.testing.assert_array_equal(merged.coeffs, [2, 2])
        assert op_trace(merged) == pytest.approx(4, abs=1e-14)

    def test_immutable(self):
        rho = from_ket(coherent([1.0]))
        with pytest.raises(AttributeError):
            rho.coeffs = None


@st.composite
def pipelines(draw):
    """Random physical pipeline on two modes: cats, splitters, loss, one measurement."""
    a = draw(st.floats(0.1, 2.0))
    b = draw(st.floats(0.1, 2.0))
    rho = tensor(from_ket(make_scs(a, draw(st.sampled_from(["plus", "minus"])))), from_ket(coherent([b])))
    rho = apply_network(rho, beamsplitter(draw(st.floats(0, 1)), 0, 1, 2))
    rho = trace_out(apply_loss(rho, draw(st.integers(0, 1)), draw(st.floats(0, 1))), 2)
    rho = apply_network(rho, phase_shift(draw(st.floats(0, 6.3)), 1, 2))
    return rho, draw(st.floats(0, 1))


class TestPipelineInvariants:
    @settings(max_examples=200)
    @given(pipelines())
    def test_probabilities_sum_to_one(self, case):
        rho, l = case
        total = op_trace(condition_click(rho, 0, l)) + op_trace(condition_no_click(rho, 0, l))
        assert total == pytest.approx(1, abs=1e-10)

    @settings(max_examples=200)
    @given(pipelines())
    def test_hermiticity_preserved(self, case):
        rho, l = case
        assert is_hermitian(rho)
        assert is_hermitian(condition_click(rho, 1, l))
        assert abs(op_trace_complex(condition_click(rho, 0, l)).imag) < 1e-10

    @settings(max_examples=100)
    @given(pipelines(), st.floats(0.1, 3.0))
    def test_conditioning_is_linear(self, case, scale):
        rho, l = case
        assert op_trace(condition_click(rho * scale, 0, l)) == pytest.approx(
            scale * op_trace(condition_click(rho, 0, l)), rel=1e-12, abs=1e-15
        )
