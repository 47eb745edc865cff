import copy

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from stirapnet.algebra import SINK, OesBasis
from stirapnet.config import Units, build_network, build_network_schedule, load_config
from stirapnet.errors import ConfigurationError
from stirapnet.network import ChiralLink, NetworkModel, NetworkParams, build_chiral_term, run_transfer
from stirapnet.node import NodeParams
from stirapnet.ensemble import EnsembleSpec
from stirapnet.pulses import network_schedule


def operator_chiral_term(basis, ka, kb, rho):
    """The four-term cascaded expression written with explicit operator products."""
    a_a = basis.transition(SINK, basis.photon(0))
    a_b = basis.transition(SINK, basis.photon(1))
    s = np.sqrt(ka * kb)
    dag = lambda m: m.conj().T
    return -s * (dag(a_b) @ a_a @ rho - a_a @ rho @ dag(a_b) + rho @ dag(a_a) @ a_b - a_b @ rho @ dag(a_a))


def random_hermitian(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return m + m.conj().T


class TestChiralLink:
    def test_matches_operator_expression(self):
        rng = np.random.default_rng(5)
        b = OesBasis(2, 3)
        for ka, kb in ((1.0, 1.0), (0.3, 2.0), (0.0, 1.0)):
            link = ChiralLink(ka, kb, b)
            for _ in range(5):
                rho = random_hermitian(rng, b.dim) + 1j * rng.normal(size=(b.dim, b.dim))
                ref = operator_chiral_term(b, ka, kb, rho)
                assert np.max(np.abs(build_chiral_term(link, rho) - ref)) < 1e-13

    def test_zero_when_either_rate_vanishes(self):
        b = OesBasis(2, 2)
        rho = b.pure(b.photon(0))
        assert np.all(ChiralLink(0.0, 1.0, b).term(rho) == 0)
        assert np.all(ChiralLink(1.0, 0.0, b).term(rho) == 0)

    def test_photon_in_a_sources_coherence_with_b(self):
        b = OesBasis(2, 1)
        ka, kb = 0.5, 2.0
        out = ChiralLink(ka, kb, b).term(b.pure(b.photon(0)))
        pa, pb = b.photon(0), b.photon(1)
        assert out[pb, pa] == pytest.approx(-1.0)
        assert out[pa, pb] == pytest.approx(-1.0)
        mask = np.ones_like(out, dtype=bool)
        mask[pb, pa] = mask[pa, pb] = False
        assert np.all(out[mask] == 0)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), ka=st.floats(0, 10), kb=st.floats(0, 10))
    def test_traceless(self, seed, ka, kb):
        b = OesBasis(2, 2)
        rho = random_hermitian(np.random.default_rng(seed), b.dim)
        rho /= np.max(np.abs(rho))
        assert abs(np.trace(ChiralLink(ka, kb, b).term(rho))) < 1e-14 * max(1.0, ka + kb)

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            ChiralLink(1.0, 1.0, OesBasis(1, 2))
        with pytest.raises(ConfigurationError):
            ChiralLink(-1.0, 1.0, OesBasis(2, 2))
        with pytest.raises(ConfigurationError):
            build_chiral_term(ChiralLink(1.0, 1.0, OesBasis(2, 2)), np.eye(3))

    def test_extraction_rate_above_total_decay(self):
        node = NodeParams(kappa=1.0, delta0=100.0, delta1=100.0, ensemble=EnsembleSpec(2))
        p = NetworkParams(node, node, 5.0, kappa_ex_a=1.5)
        with pytest.raises(ConfigurationError):
            p.link_rates()
        with pytest.raises(ConfigurationError):
            NetworkModel(p).generator(network_schedule(1.0, 2.0, 1.0, 5.0))


def small_network(groups=3, **node_overrides):
    """The NV scenario with fewer spin groups, fast enough for unit tests."""
    cfg = load_config("network-nv")
    cfg = copy.deepcopy(cfg)
    cfg["node"]["ensemble"]["groups"] = groups
    units = Units.from_config(cfg)
    params = build_network(cfg, units, node_overrides=node_overrides or None)
    schedule = build_network_schedule(cfg, params, units)
    return params, schedule


def test_parameter_set_ratios():
    params, schedule = small_network(20)
    a = params.node_a
    assert a.kappa == 1.0
    assert a.g_f == pytest.approx(10.0)
    assert a.omega_c0 == pytest.approx(200.0)
    assert a.delta0 == pytest.approx(20 * a.omega_c0)
    assert params.dispersive_detuning == pytest.approx(20 * a.g_f)
    assert schedule.optical.peak == pytest.approx(200.0)


def test_no_drive_never_reaches_qubit_b():
    params, s = small_network()
    dark = network_schedule(0.0, s.optical.center, s.optical.width, s.stop)
    res = run_transfer(params, dark, dark.times(201), 1e-8, 1e-10)
    assert np.max(np.abs(res.trajectory["qubitB"])) < 1e-6


def test_all_couplings_zero_gives_plain_decay():
    params, s = small_network(g_f=0.0, gc=0.0, omega_c0=0.0)
    g1 = params.node_a.gamma1_qb
    res = run_transfer(params, s, s.times(101), 1e-9, 1e-12)
    t = res.trajectory.times
    assert np.max(np.abs(res.trajectory["qubitA"] - np.exp(-g1 * t))) < 1e-8
    assert np.max(np.abs(res.trajectory["qubitB"])) < 1e-12
    assert res.peak_fidelity < 1e-6


LOSSLESS = dict(gamma1_qb=0.0, gamma2_qb=0.0, spin_decay=0.0, spin_dephasing=0.0, xi=1.0)


def test_lossless_loss_accounts_for_everything_else():
    params, s = small_network(**LOSSLESS)
    res = run_transfer(params, s, s.times(401), 1e-9, 1e-11)
    tr = res.trajectory
    held = tr["qubitA"] + tr["qubitB"] + tr["spinsTotal"] + tr["cavityA"] + tr["cavityB"]
    assert np.max(np.abs(tr["sink"] - (1 - held))) < 1e-8
    # only the cavity outputs lose photons; what stays behind in A, the spins and the
    # cavities at the window end is below two percent
    residual = held[-1] - tr["qubitB"][-1]
    assert 0 <= residual < 0.02
    assert abs(res.final_loss - (1 - tr["qubitB"][-1])) <= residual + 1e-8


def test_decay_only_matches_amplitude_oracle():
    # without dephasing the excited block stays a pure (unnormalised) state: psi psi^+
    params, s = small_network(gamma2_qb=0.0, spin_dephasing=0.0)
    model = NetworkModel(params)
    gen = model.generator(s)
    d = model.basis.dim
    k = np.zeros((d, d), dtype=complex)
    for ch in gen.channels:
        k += ch.rate * ch.operator.conj().T @ ch.operator
    a, b = model.basis.photon(0), model.basis.photon(1)
    cascade = np.zeros((d, d))
    cascade[b, a] = gen.chiral.strength

    def rhs(t, psi):
        return (-1j * gen.hamiltonian(t) - 0.5 * k - cascade) @ psi

    times = s.times(81)
    psi0 = np.zeros(d, dtype=complex)
    psi0[model.basis.qubit(0)] = 1
    sol = solve_ivp(rhs, (times[0], times[-1]), psi0, t_eval=times, method="DOP853",
                    rtol=1e-11, atol=1e-13)
    res = run_transfer(params, s, times, 1e-10, 1e-12, model=model, store_states=True)
    for i in range(len(times)):
        psi = sol.y[:, i]
        rho = res.trajectory.states[i]
        assert np.max(np.abs(rho[1:, 1:] - np.outer(psi, psi.conj())[1:, 1:])) < 1e-7
        assert abs(rho[SINK, SINK].real - (1 - np.vdot(psi, psi).real)) < 1e-7


@pytest.mark.xfail(strict=True, reason="the dispersive network model tops out near 0.94 "
                                       "even without qubit and spin losses")
def test_lossless_transfer_is_near_complete():
    params, s = small_network(20, **LOSSLESS)
    res = run_transfer(params, s, s.times(801), 1e-7, 1e-9)
    assert res.peak_population > 0.98
