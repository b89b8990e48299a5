"""Acceptance suite: one verdict line per criterion (see the run summary).

Three subchecks are expected to stay red on the bundled five-decimal data;
each failing assertion says why.  Everything else must pass at the stated
tolerance.
"""

import numpy as np
import pytest

from agecomp import cluster, io, linalg, regress, schedule
from agecomp.cli import image_rank_approx


def _verdict(log, number, checks, extra=""):
    """checks: list of (ok, description); appends the line, then asserts."""
    failed = [desc for ok, desc in checks if not ok]
    status = "PASS" if not failed else "FAIL"
    detail = f" [{'; '.join(failed)}]" if failed else ""
    if extra:
        detail += f" ({extra})"
    log.append(f"criterion {number}: {status}{detail}")
    assert not failed, f"criterion {number}: {failed}"


def _close(value, target, tol):
    return abs(value - target) <= tol


def _joint_sign_close(values, targets, tol):
    v = np.asarray(values, dtype=float)
    t = np.asarray(targets, dtype=float)
    return min(np.abs(v - t).max(), np.abs(v + t).max()) <= tol


@pytest.fixture(scope="module")
def mortality_pieces(mortality_log, covariates):
    f = linalg.svd(mortality_log.data)
    basis = schedule.build_basis(mortality_log, 2)
    weights = schedule.svd_weights(mortality_log, 2)
    table = covariates.with_delta()
    return f, basis, weights, table


def _predicted(matrix, basis, weights, table, predictors):
    models = regress.fit_weight_models(weights, table, predictors)
    cols = [
        regress.predict_schedule(basis, models, table.row(lbl)).values
        for lbl in matrix.schedule_labels
    ]
    return schedule.ScheduleMatrix(
        matrix.group_labels, matrix.schedule_labels, np.column_stack(cols), "log"
    )


def test_criterion_1_worked_3x2_example(acceptance_log):
    f = linalg.svd([[2.0, 1.0], [1.0, 1.0], [1.0, 2.0]])
    u_ref = np.array([[-0.6396, -0.7071], [-0.4264, 0.0], [-0.6396, 0.7071]])
    v_ref = np.array([[-0.7071, -0.7071], [-0.7071, 0.7071]])
    rank1 = linalg.reconstruct_rank(f, 1)
    checks = [
        (_close(f.s[0], 3.316625, 1e-6), f"s1={f.s[0]:.8f} vs 3.316625 +-1e-6"),
        (_close(f.s[1], 1.0, 1e-6), f"s2={f.s[1]:.8f} vs 1.0 +-1e-6"),
        (
            all(
                _joint_sign_close(f.u[:, i], u_ref[:, i], 1e-4)
                and _joint_sign_close(f.v[:, i], v_ref[:, i], 1e-4)
                for i in range(2)
            ),
            "u, v vs printed values +-1e-4 up to joint sign",
        ),
        (
            np.abs(rank1[:, 0] - [1.5, 1.0, 1.5]).max() <= 1e-6,
            "rank-1 reconstruction of column 1 vs (1.5, 1, 1.5) +-1e-6",
        ),
    ]
    _verdict(acceptance_log, 1, checks)


def test_criterion_2_mortality_decomposition(acceptance_log, mortality_pieces):
    f, *_ = mortality_pieces
    shares_pct = 100 * linalg.explained_share(f)
    checks = [
        (_close(f.s[0], 123.8, 0.1), f"s1={f.s[0]:.4f} vs 123.8 +-0.1"),
        (_close(f.s[1], 5.1, 0.05), f"s2={f.s[1]:.4f} vs 5.1 +-0.05"),
        (_close(f.s[2], 1.7, 0.05), f"s3={f.s[2]:.4f} vs 1.7 +-0.05"),
        (_close(f.s[3], 1.2, 0.05), f"s4={f.s[3]:.4f} vs 1.2 +-0.05"),
        (_close(shares_pct[0], 99.8, 0.02), f"share1={shares_pct[0]:.4f}% vs 99.8% +-0.02pp"),
        # Known red: the published 0.2% is a one-significant-figure rounding.
        # The decomposition gives 0.167%, and even the published singular
        # values (5.1^2 over the published total) give 0.169%, so no
        # implementation can land within 0.02pp of 0.2%.
        (_close(shares_pct[1], 0.2, 0.02), f"share2={shares_pct[1]:.4f}% vs 0.2% +-0.02pp"),
        (_close(shares_pct[2], 0.02, 0.02), f"share3={shares_pct[2]:.4f}% vs 0.02% +-0.02pp"),
        (_close(shares_pct[3], 0.009, 0.02), f"share4={shares_pct[3]:.5f}% vs 0.009% +-0.02pp"),
    ]
    _verdict(acceptance_log, 2, checks)


def test_criterion_3_fertility_decomposition(acceptance_log, fertility_log):
    f = linalg.svd(fertility_log.data)
    targets = [33.64, 1.76, 0.22, 0.18]
    checks = [
        (_close(f.s[i], targets[i], 0.05), f"s{i + 1}={f.s[i]:.4f} vs {targets[i]} +-0.05")
        for i in range(4)
    ]
    _verdict(acceptance_log, 3, checks)


def test_criterion_4_table5_reproduction(acceptance_log, mortality_log, mortality_pieces):
    _, basis, weights, table = mortality_pieces
    checks = []

    smoothed = schedule.smooth_matrix(mortality_log, 2)
    m = schedule.error_metrics(smoothed, mortality_log)
    checks.append((_close(m.mae, 0.080, 0.003), f"SVD MAE {m.mae:.4f} vs 0.080 +-0.003"))
    svd_q = [0.0013, 0.0322, 0.0651, 0.1100, 0.3000]
    checks.append(
        (
            np.abs(m.quantiles - svd_q).max() <= 0.003,
            f"SVD quantiles {np.round(m.quantiles, 4)} vs {svd_q} +-0.003",
        )
    )

    pred = _predicted(mortality_log, basis, weights, table, ["e0", "delta"])
    m2 = schedule.error_metrics(pred, mortality_log)
    checks.append((_close(m2.mae, 0.083, 0.003), f"e0&delta MAE {m2.mae:.4f} vs 0.083 +-0.003"))
    ed_q = [0.002174, 0.031208, 0.069663, 0.116879, 0.299046]
    checks.append(
        (
            np.abs(m2.quantiles - ed_q).max() <= 0.004,
            f"e0&delta quantiles {np.round(m2.quantiles, 4)} vs {np.round(ed_q, 4)} +-0.004",
        )
    )

    rows = {
        "q5_0": (["q5_0"], [0.002252, 0.043255, 0.091623, 0.152007, 0.449184]),
        "q45_15": (["q45_15"], [0.001827, 0.035096, 0.075179, 0.133854, 0.354826]),
        "q5_0&q45_15": (
            ["q5_0", "q45_15"],
            [0.002496, 0.033556, 0.070406, 0.131788, 0.324306],
        ),
    }
    for name, (predictors, expected) in rows.items():
        mq = schedule.error_metrics(
            _predicted(mortality_log, basis, weights, table, predictors), mortality_log
        )
        checks.append(
            (
                np.abs(mq.quantiles - expected).max() <= 0.006,
                f"{name} quantiles {np.round(mq.quantiles, 4)} vs {np.round(expected, 4)} +-0.006",
            )
        )
    _verdict(acceptance_log, 4, checks)


def test_criterion_5_regression_goldens(
    acceptance_log, mortality_pieces, fertility_log, fertility_covariates
):
    _, _, weights, table = mortality_pieces
    m1, m2 = regress.fit_weight_models(weights, table, ["e0", "delta"])
    checks = [
        (
            _joint_sign_close(m1.coefficients, [0.1024, 0.0021, -0.0005], 5e-4),
            f"first-weight coefficients {np.round(m1.coefficients, 5)} vs (0.1024, 0.0021, -0.0005) +-0.0005",
        ),
        (_close(m1.r_squared, 0.9961, 0.002), f"first-weight R2 {m1.r_squared:.4f} vs 0.9961 +-0.002"),
        (
            _joint_sign_close(m2.coefficients, [-0.8532, 0.0192, -0.0253], 5e-3),
            f"second-weight coefficients {np.round(m2.coefficients, 5)} vs (-0.8532, 0.0192, -0.0253) +-0.005",
        ),
        (_close(m2.r_squared, 0.9779, 0.005), f"second-weight R2 {m2.r_squared:.4f} vs 0.9779 +-0.005"),
    ]

    fw = schedule.svd_weights(fertility_log, 2)
    f1, f2 = regress.fit_weight_models(fw, fertility_covariates, ["tfr"])
    checks.append(
        (
            _joint_sign_close(f1.coefficients, [0.344799, -0.039329], 3e-3),
            f"fertility first-weight coefficients {np.round(f1.coefficients, 6)} vs (0.344799, -0.039329) +-0.003",
        )
    )
    checks.append(
        (_close(f1.r_squared, 0.746, 0.01), f"fertility first-weight R2 {f1.r_squared:.4f} vs 0.746 +-0.01")
    )
    # Known red (intercept only): the bundled TFR column is printed to two
    # decimals, and rounding the regressor by +-0.005 can move this fitted
    # intercept by up to +-0.022 (measured worst case), swamping the
    # +-0.003 window; the published fit used unrounded TFR values that are
    # not recoverable from the published tables.  The first-weight model is
    # about seven times less sensitive, which is why it does reproduce.
    checks.append(
        (
            _joint_sign_close(f2.coefficients, [-1.236473, 0.424483], 3e-3),
            f"fertility second-weight coefficients {np.round(f2.coefficients, 6)} vs (-1.236473, 0.424483) +-0.003",
        )
    )
    checks.append(
        (_close(f2.r_squared, 0.431, 0.01), f"fertility second-weight R2 {f2.r_squared:.4f} vs 0.431 +-0.01")
    )
    _verdict(acceptance_log, 5, checks)


def test_criterion_6_fertility_prediction(acceptance_log, fertility_log, fertility_covariates):
    basis = schedule.build_basis(fertility_log, 2)
    weights = schedule.svd_weights(fertility_log, 2)
    pred = _predicted(fertility_log, basis, weights, fertility_covariates, ["tfr"])
    m = schedule.error_metrics(pred, fertility_log)
    expected = [0.0021, 0.0167, 0.0395, 0.0795, 0.6440]
    checks = [
        (_close(m.mae, 0.0834, 0.004), f"log-scale MAE {m.mae:.4f} vs 0.0834 +-0.004"),
        (
            np.abs(m.quantiles - expected).max() <= 0.005,
            f"quantiles {np.round(m.quantiles, 4)} vs {expected} +-0.005",
        ),
    ]
    _verdict(acceptance_log, 6, checks)


def _year_runs(labels, years):
    runs = []
    for year, lab in zip(years, labels):
        if runs and runs[-1][0] == lab:
            runs[-1][2] = year
        else:
            runs.append([lab, year, year])
    return runs


def test_criterion_7_clustering(acceptance_log, mortality_pieces, mortality_log, rng):
    _, _, weights, _ = mortality_pieces

    # fallback properties, always required
    path = cluster.em_log_likelihood_path(weights, k=4, family="full", seed=0)
    monotone = all(b >= a - 1e-10 for a, b in zip(path, path[1:]))

    blob_angle = rng.uniform(0, 2 * np.pi, size=40)
    blob_r = 0.1 * np.sqrt(rng.uniform(0, 1, size=40))
    blob = np.column_stack([blob_r * np.cos(blob_angle), blob_r * np.sin(blob_angle)])
    blob[20:] += 10.0
    two_blob_model = cluster.select_by_bic(blob, range(1, 5), seed=0)
    blob_labels = cluster.assign(two_blob_model, blob).labels
    blobs_ok = (
        two_blob_model.k == 2
        and len(set(blob_labels[:20])) == 1
        and len(set(blob_labels[20:])) == 1
        and blob_labels[0] != blob_labels[20]
    )

    # the soft target from the publication: a BIC-selected partition of the
    # nineteen weight rows into 3..5 temporally contiguous periods
    model = cluster.select_by_bic(weights, range(1, 7), seed=0)
    labels = cluster.assign(model, weights).labels
    years = [int(y) for y in mortality_log.schedule_labels]
    runs = _year_runs(labels, years)
    contiguous = len(runs) == model.k
    partition = ", ".join(f"{a}-{b}" for _, a, b in runs)

    boundary_ok = True
    if model.k == 4 and contiguous:
        ends = sorted(r[2] for r in runs[:-1])
        boundary_ok = all(abs(e - t) <= 1 for e, t in zip(ends, (1997, 2002, 2008)))

    checks = [
        (monotone, "EM log-likelihood monotone"),
        (blobs_ok, "two-blob data recovers k=2 with 0 misclassifications"),
        # Known red: with seeded k-means++ restarts keeping the best
        # likelihood, minimum BIC on these nineteen weight rows favors
        # k=6 fragments, and the 2009-2011 weights loop back into the
        # 1998-2002 region, so high-k partitions are not contiguous in
        # time.  The published four contiguous periods correspond to a
        # lower-likelihood local optimum found by a different
        # initialization strategy.
        (
            model.k in (3, 4, 5) and contiguous and boundary_ok,
            f"selected k={model.k} ({model.family}) in 3..5 with contiguous periods",
        ),
    ]
    _verdict(
        acceptance_log, 7, checks,
        extra=f"selected {model.family} k={model.k}, periods {partition}",
    )


def test_criterion_8_property_suites(acceptance_log, mortality_log, fertility_log, rng):
    checks = []

    eym_ok = True
    identity_ok = True
    for _ in range(20):
        shape = rng.integers(4, 11, size=2)
        x = rng.normal(size=shape)
        f = linalg.svd(x)
        for k in range(1, f.rank):
            best = linalg.frobenius_residual(x, linalg.reconstruct_rank(f, k))
            for _ in range(200):
                cand = rng.normal(size=(shape[0], k)) @ rng.normal(size=(k, shape[1]))
                scale = np.sum(x * cand) / max(np.sum(cand * cand), 1e-300)
                if best > linalg.frobenius_residual(x, scale * cand) + 1e-12:
                    eym_ok = False
        for k in range(1, f.rank + 1):
            resid2 = linalg.frobenius_residual(x, linalg.reconstruct_rank(f, k)) ** 2
            tail = float((f.s[k:] ** 2).sum())
            if abs(resid2 - tail) > 1e-8 * max(tail, 1e-12):
                identity_ok = False
    checks.append((eym_ok, "truncation beats 200+ random rank-k candidates on 20 matrices"))
    checks.append((identity_ok, "squared truncation residual equals the dropped singular-value mass"))

    pca_ok = True
    for _ in range(5):
        x = rng.normal(size=(20, 3)) * rng.uniform(0.5, 3.0, size=3)
        c = linalg.center_columns(x) / np.sqrt(19.0)
        f = linalg.svd(c)
        eigvals, eigvecs = np.linalg.eigh(c.T @ c)
        order = np.argsort(eigvals)[::-1]
        for i in range(f.rank):
            if abs(abs(eigvecs[:, order[i]] @ f.v[:, i]) - 1.0) > 1e-8:
                pca_ok = False
    checks.append((pca_ok, "centered-data right singular vectors match Gram eigenvectors +-sign"))

    basis = schedule.build_basis(mortality_log, 2)
    ols_ok = True
    design = basis.components
    gram = design.T @ design
    for label in mortality_log.schedule_labels:
        col = mortality_log.column(label)
        fit = schedule.fit_weights(col, basis)
        oracle = np.linalg.solve(gram, design.T @ col.values)
        if np.abs(fit.betas - oracle).max() > 1e-10:
            ols_ok = False
    checks.append((ols_ok, "closed-form weight fit matches the normal-equations oracle at 1e-10"))

    corr_m = np.corrcoef(mortality_log.data.T)
    corr_f = np.corrcoef(fertility_log.data.T)
    checks.append(
        (
            corr_m[np.triu_indices_from(corr_m, k=1)].min() >= 0.90,
            "mortality pairwise column correlations >= 0.90",
        )
    )
    checks.append(
        (
            corr_f[np.triu_indices_from(corr_f, k=1)].min() >= 0.99,
            "fertility pairwise column correlations >= 0.99",
        )
    )
    _verdict(acceptance_log, 8, checks)


def test_criterion_9_image_demo(acceptance_log, tmp_path):
    h = w = 64
    i = np.arange(h)[:, None].astype(float)
    j = np.arange(w)[None, :].astype(float)
    off_center = np.sqrt((i - 20.0) ** 2 + (j - 44.0) ** 2)
    centered = np.sqrt((i - h / 2.0) ** 2 + (j - w / 2.0) ** 2)
    img = np.stack(
        [
            255.0 * (0.35 * (i + j) / (h + w - 2) + 0.65 * off_center / off_center.max()),
            255.0 * centered / centered.max(),
            127.5 + 127.5 * np.sin(centered / 5.0),
        ],
        axis=-1,
    )
    src = tmp_path / "gradient.ppm"
    io.write_ppm(img, src, "P6")
    original, _ = io.read_ppm(src)

    errors = {}
    for k in (1, 2, 4, 8):
        out = tmp_path / f"rank{k}.ppm"
        image_rank_approx(src, k, out)
        approx, _ = io.read_ppm(out)
        errors[k] = [
            float(np.linalg.norm(approx[:, :, ch] - original[:, :, ch])) for ch in range(3)
        ]
    decreasing = all(
        errors[a][ch] > errors[b][ch]
        for a, b in ((1, 2), (2, 4), (4, 8))
        for ch in range(3)
    )

    full = tmp_path / "full.ppm"
    image_rank_approx(src, min(h, w), full)
    restored, _ = io.read_ppm(full)
    max_byte_err = float(np.abs(restored - original).max())

    checks = [
        (decreasing, "per-channel error strictly decreases over k in (1, 2, 4, 8)"),
        (max_byte_err <= 1.0, f"full-rank reconstruction within 1 byte (max {max_byte_err})"),
    ]
    _verdict(acceptance_log, 9, checks)
