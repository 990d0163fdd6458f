"""Release acceptance suite.

Each test exercises one end-to-end contract at full scale and prints a
single ``ACCEPTANCE <i>: PASS/FAIL - <detail>`` line on the terminal
(capture is lifted for that line) so the gate stays auditable in any
pytest mode.  The tolerances are part of the release contract; they
must not be loosened to make a failing criterion pass.
"""
import math
import time

import numpy as np
from scipy import integrate

from conftest import random_bulk
from spikedcov import rmt, robustness, simlab, spectra
from spikedcov.numkernel import RngStream, psd_sqrt, sym_eig


def announce(capsys, index: int, ok: bool, detail: str) -> bool:
    verdict = "PASS" if ok else "FAIL"
    with capsys.disabled():
        # leading newline keeps the line off the progress-dot row
        print(f"\nACCEPTANCE {index}: {verdict} - {detail}", flush=True)
    return ok


def spectrum_row(n: int, p: int, seed: int) -> dict:
    cfg = simlab.parse_config(
        f"n={n}\np={p}\nmodel=gaussian\nreplicates=1\n", seed=seed
    )
    report = simlab.run_spectrum_experiment(cfg)
    return dict(zip(report.columns, report.records[0]))


def test_01_tall_case_spectra_match_limits(capsys):
    start = time.monotonic()
    row = spectrum_row(n=2000, p=800, seed=101)
    elapsed = time.monotonic() - start
    ok = row["ks_ppca"] <= 0.03 and row["ks_pca"] <= 0.03 and elapsed <= 120.0
    assert announce(
        capsys,
        1,
        ok,
        f"n=2000 p=800: KS ppca={row['ks_ppca']:.4f} pca={row['ks_pca']:.4f} "
        f"(gate 0.03) in {elapsed:.1f}s (gate 120s)",
    )


def test_02_wide_case_zero_mass_and_conditional_fit(capsys):
    row = spectrum_row(n=2000, p=4000, seed=102)
    exact = row["zero_frac_ppca"] == 0.75 and row["zero_frac_pca"] == 0.5
    cond_ok = row["cond_ks_ppca"] <= 0.04 and row["cond_ks_pca"] <= 0.04
    assert announce(
        capsys,
        2,
        exact and cond_ok,
        f"n=2000 p=4000: zero fractions ppca={row['zero_frac_ppca']} "
        f"pca={row['zero_frac_pca']} (need exactly 0.75/0.5), conditional KS "
        f"ppca={row['cond_ks_ppca']:.4f} pca={row['cond_ks_pca']:.4f} (gate 0.04)",
    )


def test_03_spike_means_and_debiasing(capsys):
    cfg = simlab.parse_config(
        "n=2000\np=800\nmodel=gaussian\nspikes=3.0\nreplicates=50\n", seed=103
    )
    report = simlab.run_spike_experiment(cfg)
    means = {name: mean for name, mean, _ in report.aggregates}
    # limits for a unit-noise bulk at aspect ratio 0.4 with population spike 3:
    # 3*(1 + 2*0.4/(9-1)) = 3.3 for the product estimator, 3*(1 + 0.4/2) = 3.6
    # for plain PCA, and 3.0 for both after bias correction
    targets = {
        "ppca_lam_1": 3.3,
        "pca_lam_1": 3.6,
        "ppca_debiased_1": 3.0,
        "pca_debiased_1": 3.0,
    }
    worst_off = max(abs(means[k] - v) / v for k, v in targets.items())
    ok = worst_off <= 0.02
    assert announce(
        capsys,
        3,
        ok,
        "50 replicates at n=2000: means "
        f"ppca {means['ppca_lam_1']:.3f}/3.3, pca {means['pca_lam_1']:.3f}/3.6, "
        f"debiased {means['ppca_debiased_1']:.3f}/3.0 and "
        f"{means['pca_debiased_1']:.3f}/3.0 (worst offset {worst_off:.2%}, "
        "gate 2%)",
    )


def test_04_generic_engine_reproduces_closed_forms(capsys):
    worst_const = worst_pdf = worst_int = 0.0
    regimes = 0
    for sigma2 in (0.5, 1.0, 2.0):
        bulk = spectra.make_spectrum(atoms=[(sigma2, 1.0)])
        for c in (0.1, 0.4, 1.0, 2.0, 5.0):
            regimes += 1
            params = rmt.SsmParams(c=c, sigma2=sigma2)
            cf = rmt.ssm_closed_forms(params)
            glo, ghi = rmt.ppca_support_edges(c, bulk)
            flo, fhi = rmt.support_edges(c, bulk)
            pairs = [
                (rmt.ppca_threshold(c, bulk).threshold, cf.lambda_star),
                (rmt.pca_threshold(c, bulk).threshold, cf.lambda_prime),
                (glo, cf.a),
                (ghi, cf.b),
                (flo, cf.a_prime),
                (fhi, cf.b_prime),
                (rmt.ppca_mass_at_zero(c, bulk), cf.mass0_ppca),
                (rmt.mass_at_zero(c, bulk), cf.mass0_pca),
                (ghi**2, cf.beta),
            ]
            if c < 0.5:
                # the squared-product lower edge: only meaningful when the
                # product law stays away from zero
                pairs.append((glo**2, cf.alpha))
            else:
                assert glo == 0.0 and cf.alpha <= 0.0
            worst_const = max(worst_const, max(abs(g - w) for g, w in pairs))
            # density grids keep a 2%-of-span margin from the edges, where
            # the limit pdfs have unbounded slope; the edges themselves are
            # covered by the constants and the cdf-level checks
            span = ghi - glo
            gg = np.linspace(glo + 0.02 * span, ghi - 0.02 * span, 25)
            gg = gg[gg > 0.0]
            worst_pdf = max(
                worst_pdf,
                float(
                    np.max(
                        np.abs(rmt.ppca_lsd_pdf(c, bulk, gg) - rmt.ssm_g_pdf(params, gg))
                    )
                ),
            )
            span = fhi - flo
            ff = np.linspace(flo + 0.02 * span, fhi - 0.02 * span, 25)
            ff = ff[ff > 0.0]
            worst_pdf = max(
                worst_pdf,
                float(
                    np.max(np.abs(rmt.mp_density(c, bulk, ff) - rmt.ssm_f_pdf(params, ff)))
                ),
            )
            g_int, _ = integrate.quad(
                lambda u: rmt.ssm_g_pdf(params, u), glo, ghi, limit=400
            )
            f_int, _ = integrate.quad(
                lambda u: rmt.ssm_f_pdf(params, u), flo, fhi, limit=400
            )
            worst_int = max(
                worst_int,
                abs(g_int - min(1.0, 0.5 / c)),
                abs(f_int - min(1.0, 1.0 / c)),
            )
    ok = worst_const <= 1e-6 and worst_pdf <= 5e-3 and worst_int <= 1e-6
    assert announce(
        capsys,
        4,
        ok,
        f"{regimes} noise-scale x aspect-ratio regimes: constants err "
        f"{worst_const:.1e} (gate 1e-6), pdf err {worst_pdf:.1e} (gate 5e-3), "
        f"continuous-mass err {worst_int:.1e} (gate 1e-6)",
    )


def test_05_spike_map_ordering_and_gap_band(capsys):
    rng = np.random.default_rng(20260814)
    cases = 200
    hits = 0
    for _ in range(cases):
        bulk = random_bulk(rng, int(rng.integers(2, 6)))
        c = float(rng.uniform(0.05, 3.0))
        lam = float(
            rmt.ppca_threshold(c, bulk).threshold * 1.5 * rng.uniform(1.0, 2.0)
        )
        low = rmt.ppca_limit(c, bulk, lam).value
        high = rmt.pca_limit(c, bulk, lam).value
        gap = high - low
        mean = bulk.bulk_mean
        if high > low > lam and 0.5 * c * mean < gap < c * mean:
            hits += 1
    assert announce(
        capsys,
        5,
        hits == cases,
        f"{hits}/{cases} random spectra satisfy ordering and the "
        "(c*mean/2, c*mean) gap band (need 100%)",
    )


def test_06_inflation_factor_floor_and_monotonicity(capsys):
    grid = np.linspace(0.0, 10.0, 1001)
    values = np.array([rmt.rho(c) for c in grid])
    floor_ok = bool(np.all(values >= 1.0 - 1e-12))
    steps = np.diff(values)
    mono_ok = bool(np.all(steps >= -1e-12))
    assert announce(
        capsys,
        6,
        floor_ok and mono_ok,
        f"rho on 1001-point grid: min {values.min():.15f} (floor 1-1e-12), "
        f"smallest increment {steps.min():.1e} (gate -1e-12)",
    )


def test_07_robustness_oracle_and_worked_scenario(capsys):
    worst = 0.0
    full_cases = (((70.0,), 1), ((70.0, 40.0), 1), ((90.0, 50.0, 20.0), 2))
    for etas, k1 in full_cases:
        scen = robustness.PerturbationScenario(
            epsilon=0.01, etas=etas, k1=k1, lambda1=3.0, c=0.4
        )
        sigma = robustness.build_perturbed_sigma(scen, 10, RngStream(71, 0))
        eigs = sym_eig(sigma)[0]
        spec = robustness.pca_perturbed_spectrum(scen)
        pred = sorted(
            [spec.signal_eigenvalue] + [v for _, v in spec.noise_eigenvalues],
            reverse=True,
        )
        pred += [spec.bulk_level] * (10 - len(pred))
        worst = max(worst, float(np.max(np.abs(eigs - pred))))
    half_cases = (
        ((70.0, 40.0), 1, frozenset({1})),
        ((70.0, 40.0), 2, frozenset({1, 2})),
        ((90.0, 50.0, 20.0), 1, frozenset({2})),
    )
    for etas, k1, assign in half_cases:
        scen = robustness.PerturbationScenario(
            epsilon=0.01, etas=etas, k1=k1, lambda1=3.0, c=0.4
        )
        s1, s2 = robustness.build_perturbed_half_sigmas(scen, 10, RngStream(72, 0), assign)
        sing = np.linalg.svd(psd_sqrt(s1) @ psd_sqrt(s2), compute_uv=False)
        spec = robustness.ppca_perturbed_spectrum(scen, assign)
        pred = sorted(
            [spec.signal_eigenvalue] + [v for _, v in spec.noise_eigenvalues],
            reverse=True,
        )
        pred += [spec.bulk_level] * (10 - len(pred))
        worst = max(worst, float(np.max(np.abs(sing - pred))))
    worked = robustness.PerturbationScenario(
        epsilon=0.01, etas=(70.0, 70.0), k1=1, lambda1=3.0, c=0.4
    )
    rank_pca = robustness.target_rank(worked, "pca")
    rank_ppca = robustness.target_rank(worked, "ppca", assignment={1})
    loud = robustness.PerturbationScenario(
        epsilon=0.01, etas=(200.0, 200.0), k1=1, lambda1=3.0, c=0.4
    )
    breaks_pca = robustness.ordering_breaks(loud, 1, "pca")
    breaks_ppca = robustness.ordering_breaks(loud, 1, "ppca", assignment={1})
    ok = (
        worst <= 1e-8
        and rank_pca == 3
        and rank_ppca == 1
        and breaks_pca
        and not breaks_ppca
    )
    assert announce(
        capsys,
        7,
        ok,
        f"matrix oracle err {worst:.1e} at p=10 (gate 1e-8); worked scenario "
        f"ranks pca={rank_pca} (want 3) ppca={rank_ppca} (want 1); at "
        f"eta=200 ordering breaks pca={breaks_pca} ppca={breaks_ppca} "
        "(want True/False)",
    )


def test_08_heavy_tail_rank_and_similarity_ordering(capsys):
    cfg = simlab.parse_config(
        "n=500\np=200\nmodel=student_t\nnu=2.5\nspikes=design\nreplicates=100\n",
        seed=108,
    )
    report = simlab.run_robustness_experiment(cfg)
    means = {name: mean for name, mean, _ in report.aggregates}
    rank_ok = means["rank_ppca"] < means["rank_pca"]
    xi_flags = [means[f"xi_ppca_{q}"] >= means[f"xi_pca_{q}"] for q in range(2, 6)]
    ok = rank_ok and all(xi_flags)
    xi_txt = ", ".join(
        f"q={q}: {means[f'xi_ppca_{q}']:.3f} vs {means[f'xi_pca_{q}']:.3f}"
        for q in range(2, 6)
    )
    assert announce(
        capsys,
        8,
        ok,
        f"100 heavy-tail replicates: mean rank ppca={means['rank_ppca']:.2f} < "
        f"pca={means['rank_pca']:.2f} is {rank_ok}; similarity ppca >= pca at "
        f"{xi_txt} ({sum(xi_flags)}/4)",
    )


def test_09_spike_theory_table_matches_closed_forms(capsys):
    cfg = simlab.parse_config(
        "n=120\np=48\nmodel=gaussian\nspikes=design\nreplicates=1\n", seed=109
    )
    c = cfg.c
    root = math.sqrt(c * c + 4.0 * c)
    star = math.sqrt(1.0 + c + root)
    spikes_ok = cfg.spikes == (10.0 * star, 5.0 * star)
    expected = {
        "ppca_threshold": star,
        "pca_threshold": 1.0 + math.sqrt(c),
        "ppca_edge_lower": math.sqrt(1.0 + c - root) * (1.0 - 0.5 * (root + c)),
        "ppca_edge_upper": math.sqrt(1.0 + c + root) * (1.0 + 0.5 * (root - c)),
        "pca_edge_lower": (1.0 - math.sqrt(c)) ** 2,
        "pca_edge_upper": (1.0 + math.sqrt(c)) ** 2,
    }
    for j, lam in enumerate(cfg.spikes, start=1):
        expected[f"population_spike_{j}"] = lam
        expected[f"ppca_limit_{j}"] = lam * (1.0 + 2.0 * c / (lam * lam - 1.0))
        expected[f"pca_limit_{j}"] = lam * (1.0 + c / (lam - 1.0))
    report = simlab.run_spike_experiment(cfg)
    name, _, rows = report.tables[0]
    table = dict(rows)
    assert name == "theory" and set(table) == set(expected)
    worst = max(abs(table[k] - v) for k, v in expected.items())
    ok = spikes_ok and worst <= 1e-8
    assert announce(
        capsys,
        9,
        ok,
        f"theory table: {len(expected)} rows match independent closed-form "
        f"arithmetic, err {worst:.1e} (gate 1e-8); design spikes are 10x/5x "
        f"the detection threshold: {spikes_ok}",
    )
