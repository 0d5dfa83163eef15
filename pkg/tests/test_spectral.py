"""Spectra and semicircle reference: eigensolves with trace/Frobenius
identities, Kolmogorov distance, Catalan moments."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from cwrmt import (
    EnsembleConfig,
    SpectralSummary,
    catalan,
    eigenvalues,
    esd_moment,
    ks_distance,
    sample_full_cw,
    sample_iid,
    scale,
    semicircle_cdf,
    semicircle_moment,
    semicircle_pdf,
    summarize,
)
from cwrmt.ensembles import SpinMatrix
from cwrmt.errors import DomainError


def _spin_matrix(entries):
    entries = np.asarray(entries, dtype=np.int8)
    cfg = EnsembleConfig(kind="iid", N=entries.shape[0])
    return SpinMatrix(N=entries.shape[0], entries=entries, latent_t=None,
                      config=cfg)


# ---------------------------------------------------------------------------
# Catalan numbers and semicircle moments
# ---------------------------------------------------------------------------

def test_catalan_values():
    assert catalan(0) == 1
    assert catalan(3) == 5
    assert catalan(10) == 16796


def test_catalan_against_recurrence():
    # independent oracle: C_{n+1} = sum_i C_i C_{n-i}
    ref = [1]
    for n in range(12):
        ref.append(sum(ref[i] * ref[n - i] for i in range(n + 1)))
    for k, c in enumerate(ref):
        assert catalan(k) == c


def test_catalan_guards():
    with pytest.raises(DomainError):
        catalan(-1)
    with pytest.raises(DomainError):
        catalan(31)


def test_semicircle_moments():
    assert semicircle_moment(0) == 1.0
    assert semicircle_moment(2) == 1.0
    assert semicircle_moment(4) == 2.0
    assert semicircle_moment(6) == 5.0
    assert semicircle_moment(8) == 14.0
    assert semicircle_moment(7) == 0.0


def test_semicircle_moments_by_quadrature():
    for k in (2, 4, 6):
        val, _ = quad(lambda x, k=k: x**k * semicircle_pdf(x), -2, 2)
        assert semicircle_moment(k) == pytest.approx(val, abs=1e-9)


# ---------------------------------------------------------------------------
# semicircle pdf / cdf
# ---------------------------------------------------------------------------

def test_pdf_values():
    assert semicircle_pdf(0.0) == pytest.approx(1.0 / math.pi, abs=1e-15)
    assert semicircle_pdf(2.0) == 0.0
    assert semicircle_pdf(-2.0) == 0.0
    assert semicircle_pdf(2.5) == 0.0
    assert semicircle_pdf(-3.0) == 0.0


def test_pdf_integrates_to_one():
    val, err = quad(semicircle_pdf, -2, 2)
    assert abs(val - 1.0) < 1e-9


def test_cdf_values():
    assert semicircle_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert semicircle_cdf(2.0) == pytest.approx(1.0, abs=1e-15)
    assert semicircle_cdf(-2.0) == pytest.approx(0.0, abs=1e-15)
    assert semicircle_cdf(5.0) == 1.0


def test_cdf_matches_pdf_quadrature():
    for x in (-1.5, -0.3, 1.0, 1.9):
        val, _ = quad(semicircle_pdf, -2, x)
        assert semicircle_cdf(x) == pytest.approx(val, abs=1e-9)


def test_cdf_monotone():
    xs = np.linspace(-2.2, 2.2, 401)
    assert np.all(np.diff(semicircle_cdf(xs)) >= 0)


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

def test_two_by_two_all_ones():
    lam = eigenvalues(scale(_spin_matrix([[1, 1], [1, 1]]), 0.0))
    assert lam == pytest.approx([0.0, 2.0], abs=1e-12)


def test_all_ones_rank_one():
    N = 8
    lam = eigenvalues(scale(_spin_matrix(np.ones((N, N))), 0.0))
    assert lam[:-1] == pytest.approx(np.zeros(N - 1), abs=1e-12)
    assert lam[-1] == pytest.approx(N, abs=1e-12)


def test_all_ones_projection():
    # all-ones divided by N is the rank-one projection: spectrum {0, 0, 1}
    lam = eigenvalues(scale(_spin_matrix(np.ones((3, 3))), 1.0))
    assert lam == pytest.approx([0.0, 0.0, 1.0], abs=1e-13)


def test_eigen_residuals():
    cfg = EnsembleConfig(kind="full_cw", N=64, beta=0.5, seed=61)
    A = scale(sample_full_cw(cfg), 0.5)
    lam = eigenvalues(A)
    w, V = np.linalg.eigh(A.values)
    assert lam == pytest.approx(w, abs=1e-12)
    norm = max(abs(w[0]), abs(w[-1]))
    for j in (0, 31, 63):
        res = np.linalg.norm(A.values @ V[:, j] - w[j] * V[:, j])
        assert res <= 1e-8 * norm


# ---------------------------------------------------------------------------
# Kolmogorov distance
# ---------------------------------------------------------------------------

def _summary_from(lams):
    lams = np.sort(np.asarray(lams, dtype=float))
    return SpectralSummary(
        eigenvalues=lams,
        moments=np.array([float(np.mean(lams**k)) for k in range(1, 5)]),
        ks_to_semicircle=0.0,
        operator_norm=float(max(abs(lams[0]), abs(lams[-1]))),
        scaling_exponent=0.5)


def test_ks_at_exact_quantiles():
    n = 64
    qs = [brentq(lambda x, p=p: semicircle_cdf(x) - p, -2.0, 2.0)
          for p in ((i - 0.5) / n for i in range(1, n + 1))]
    assert ks_distance(_summary_from(qs)) <= 1.0 / (2 * n) + 1e-9


def test_ks_single_atom():
    assert ks_distance(_summary_from([0.0])) == pytest.approx(0.5, abs=1e-12)


def test_ks_iid_baseline():
    cfg = EnsembleConfig(kind="iid", N=1000, seed=67)
    s = summarize(scale(sample_iid(cfg), 0.5))
    assert s.ks_to_semicircle < 0.05


# ---------------------------------------------------------------------------
# summaries and ESD moments
# ---------------------------------------------------------------------------

def test_summary_fields_and_norm_consistency():
    cfg = EnsembleConfig(kind="iid", N=200, seed=71)
    s = summarize(scale(sample_iid(cfg), 0.5), k_max=6)
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert s.operator_norm == max(abs(s.eigenvalues[0]),
                                  abs(s.eigenvalues[-1]))
    assert s.operator_norm <= math.sqrt(np.sum(s.eigenvalues**2))
    assert s.scaling_exponent == 0.5
    assert len(s.moments) == 6


def test_second_esd_moment_is_deterministic():
    # spin entries squared are 1, so (1/N) tr A^2 = 1 exactly at gamma = 1/2
    for kind, kw in [("iid", {}), ("full_cw", {"beta": 1.5})]:
        cfg = EnsembleConfig(kind=kind, N=150, seed=73, **kw)
        from cwrmt import sample_matrix
        s = summarize(scale(sample_matrix(cfg), 0.5))
        assert esd_moment(s, 2) == pytest.approx(1.0, abs=1e-12)


def test_first_esd_moment_small_iid():
    cfg = EnsembleConfig(kind="iid", N=1000, seed=79)
    s = summarize(scale(sample_iid(cfg), 0.5))
    assert abs(esd_moment(s, 1)) < 0.1


def test_odd_esd_moments_center_on_zero():
    vals = []
    for r in range(10):
        cfg = EnsembleConfig(kind="full_cw", N=300, beta=0.5, seed=83,
                             replica_index=r)
        vals.append(esd_moment(summarize(scale(sample_full_cw(cfg), 0.5)), 3))
    vals = np.array(vals)
    stderr = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean()) < 3 * stderr + 1e-6


def test_esd_moment_guard():
    cfg = EnsembleConfig(kind="iid", N=10, seed=89)
    s = summarize(scale(sample_iid(cfg), 0.5))
    with pytest.raises(DomainError):
        esd_moment(s, 0)
