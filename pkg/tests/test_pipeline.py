import json
import statistics

import numpy as np
import pytest

from mixlab.grpo import GrpoConfig
from mixlab.pipeline import (
    PipelineConfig,
    SeedPlan,
    pipeline_config_from_dict,
    plan_seed_mixtures,
    refine,
    run_full,
    run_seed_phase,
    write_report,
)
from mixlab.records import read_records, serialize_record
from mixlab.search import ProposalConfig
from mixlab.surrogate import FitConfig, cross_validated_fit
from mixlab.world import BenchmarkDef, WorldSpec, make_world


def small_spec():
    return WorldSpec(
        m=3, k=24, A=4,
        pool_sizes=(80, 80, 80),
        domain_skills=(tuple(range(0, 8)), tuple(range(6, 16)), tuple(range(16, 24))),
        benchmarks=(
            BenchmarkDef.uniform_over("in-0", "in", range(0, 8), 24),
            BenchmarkDef.uniform_over("in-1", "in", range(6, 16), 24),
            BenchmarkDef.uniform_over("out-all", "out", range(0, 16), 24),
        ),
    )


def small_config(**overrides):
    defaults = dict(
        world_spec=small_spec(),
        world_seed=3,
        train=GrpoConfig(steps=60, peak_learning_rate=0.08),
        seed_plan=SeedPlan(replicates=2),
        fit=FitConfig(degree=2, n_splits=4, test_fraction=0.25, seed=1),
        proposal=ProposalConfig(n_samples=400, k=3, jitter=1e-4, seed=1),
        verify_seeds=2,
        base_seed=7,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


class TestPlanSeedMixtures:
    def test_five_domains_gives_eleven(self):
        plan = plan_seed_mixtures(SeedPlan(), 5)
        assert len(plan) == 11

    def test_two_domains_dedups_exclude_ones(self):
        plan = plan_seed_mixtures(SeedPlan(), 2)
        assert [p.weights for p in plan] == [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]

    def test_plan_respects_switches(self):
        only_singles = plan_seed_mixtures(SeedPlan(exclude_ones=False, include_all=False), 4)
        assert len(only_singles) == 4
        no_singles = plan_seed_mixtures(SeedPlan(singles=False), 4)
        assert len(no_singles) == 5

    def test_empty_plan_rejected(self):
        with pytest.raises(ValueError):
            PipelineConfig(
                world_spec=small_spec(),
                seed_plan=SeedPlan(singles=False, exclude_ones=False, include_all=False),
            )


class TestSeedPhase:
    def test_record_count_and_ids(self):
        config = small_config()
        records = run_seed_phase(config)
        assert len(records) == 7 * 2  # 3 singles + 3 exclude-ones + all, twice
        assert all(r.id.startswith("seed:") for r in records)
        assert all(r.weights is not None for r in records)

    def test_deterministic(self):
        config = small_config()
        first = run_seed_phase(config)
        second = run_seed_phase(config)
        assert [serialize_record(r) for r in first] == [serialize_record(r) for r in second]

    def test_distinct_seeds_per_replicate(self):
        config = small_config()
        records = run_seed_phase(config)
        by_mixture = {}
        for record in records:
            by_mixture.setdefault(record.weights.weights, []).append(record)
        for rows in by_mixture.values():
            assert len(rows) == 2
            # different training seeds should almost surely differ somewhere
            assert serialize_record(rows[0]) != serialize_record(rows[1])


@pytest.fixture(scope="module")
def report():
    return run_full(small_config())


class TestRunFull:
    def test_proposals_sorted_by_prediction(self, report):
        predicted = [row.predicted for row in report.proposals]
        assert predicted == sorted(predicted, reverse=True)
        assert len(report.proposals) == 3

    def test_one_row_per_proposal_with_realizations(self, report):
        for row in report.proposals:
            assert len(row.realized) == 2
            assert all(0.0 <= v <= 1.0 for v in row.realized)
        assert len(report.uniform.realized) == 2

    def test_no_leakage_between_fit_and_verification(self, report):
        fit_ids = {r.id for r in report.fitting_records}
        verify_ids = {r.id for r in report.verification_records}
        assert not fit_ids & verify_ids
        assert all(i.startswith("seed:") for i in fit_ids)
        assert all(i.startswith("verify:") for i in verify_ids)
        fit_steps_seeds = {7 + j for j in range(len(fit_ids))}
        assert all(seed >= 10_000 for seed in report.verify_seeds_used)
        assert not fit_steps_seeds & set(report.verify_seeds_used)

    def test_report_serializes(self, report, tmp_path):
        paths = write_report(report, tmp_path / "out")
        assert all(p.exists() for p in paths.values())
        reloaded = json.loads(paths["report"].read_text())
        assert len(reloaded["proposals"]) == 3
        records = read_records(paths["records"])
        assert len(records) == len(report.fitting_records) + len(report.verification_records)
        summary = paths["summary"].read_text()
        assert "delta of top predicted mixture vs uniform" in summary

    def test_quadratic_dominates_linear_on_same_splits(self, report):
        import math

        records = report.fitting_records
        suite = make_world(small_spec(), 3).suite()
        _, linear = cross_validated_fit(records, degree=1, seed=4, suite=suite)
        _, quad = cross_validated_fit(records, degree=2, seed=4, suite=suite)
        compared = 0
        for lo, hi in zip(linear.train_r2, quad.train_r2):
            if math.isnan(lo) or math.isnan(hi):
                continue
            assert hi >= lo - 1e-12
            compared += 1
        assert compared > 0

    def test_uniform_realized_present(self, report):
        assert report.uniform.weights.weights == pytest.approx((1 / 3, 1 / 3, 1 / 3))
        assert isinstance(report.delta_vs_uniform, float)


class TestKZero:
    def test_report_contains_only_uniform(self):
        config = small_config(proposal=ProposalConfig(n_samples=50, k=0, jitter=1e-4, seed=1))
        report = run_full(config)
        assert report.proposals == ()
        assert report.delta_vs_uniform == 0.0
        assert report.best_proposal is None
        assert len(report.uniform.realized) == 2


class TestRefine:
    def test_zero_rounds_is_identity(self):
        report = run_full(small_config())
        assert refine(report, 0) is report

    def test_one_round_grows_fitting_set_by_k(self):
        report = run_full(small_config())
        refined = refine(report, 1)
        assert len(refined.fitting_records) == len(report.fitting_records) + 3
        assert refined.refine_rounds == 1
        new_ids = {r.id for r in refined.fitting_records} - {r.id for r in report.fitting_records}
        assert all(i.startswith("refine:0:") for i in new_ids)

    def test_two_rounds(self):
        report = run_full(small_config())
        refined = refine(report, 2)
        assert len(refined.fitting_records) == len(report.fitting_records) + 6
        assert refined.refine_rounds == 2

    def test_refit_uses_appended_rows(self):
        report = run_full(small_config())
        refined = refine(report, 1)
        assert refined.fit_report.n_records == len(refined.fitting_records)

    def test_more_noiseless_quadratic_samples_do_not_hurt_fit(self):
        # the data-level content of one refinement round: on an exactly
        # quadratic noiseless target, extra records improve the held-out fit
        # (median over seeds); live training runs are stochastic, so the
        # property is asserted where it actually holds
        from mixlab.mixtures import normalize_to_simplex
        from mixlab.records import BenchmarkSpec, PerformanceRecord
        from mixlab.surrogate import SurrogateModel, predict

        suite = [BenchmarkSpec("obj", 1, "out"), BenchmarkSpec("d", 1, "in")]
        quad = np.array([
            [0.5, -0.3, 0.1, 0.0],
            [-0.3, 0.4, 0.0, 0.1],
            [0.1, 0.0, -0.4, 0.2],
            [0.0, 0.1, 0.2, 0.3],
        ])
        truth = SurrogateModel(degree=2, intercept=0.45,
                               linear=np.array([0.1, -0.05, 0.05, 0.0]), quad=quad)

        def sample_records(n, rng):
            out = []
            for _ in range(n):
                w = normalize_to_simplex(rng.uniform(0.05, 1.0, 4))
                out.append(PerformanceRecord(
                    f"r{rng.integers(10**9)}", w.dataset_labels(), w,
                    {"obj": predict(truth, w), "d": 0.5},
                ))
            return out

        before, after = [], []
        for seed in range(9):
            rng = np.random.default_rng(seed)
            base = sample_records(10, rng)
            extra = sample_records(3, rng)
            _, rep_before = cross_validated_fit(base, degree=2, seed=seed, suite=suite)
            _, rep_after = cross_validated_fit(base + extra, degree=2, seed=seed, suite=suite)
            before.append(float(np.nanmax(rep_before.test_r2)))
            after.append(float(np.nanmax(rep_after.test_r2)))
        assert statistics.median(after) >= statistics.median(before)


class TestParallelism:
    def test_jobs_two_matches_serial(self):
        config = small_config()
        serial = run_seed_phase(config, jobs=1)
        parallel = run_seed_phase(config, jobs=2)
        assert [serialize_record(r) for r in serial] == [serialize_record(r) for r in parallel]


class TestConfigFromDict:
    def test_full_parse(self):
        obj = {
            "world": {"m": 2, "k": 8, "A": 4, "pool_sizes": [20, 20]},
            "world_seed": 5,
            "train": {"steps": 30, "reward_weights": {"accuracy": 2.0, "format": 1.0}},
            "seed_plan": {"replicates": 2},
            "fit": {"degree": 2, "seed": 3},
            "proposal": {"n_samples": 100, "k": 2, "seed": 3},
            "verify_seeds": 2,
            "base_seed": 9,
        }
        config = pipeline_config_from_dict(obj)
        assert config.train.steps == 30
        assert config.seed_plan.replicates == 2
        assert config.proposal.k == 2
        assert config.base_seed == 9

    def test_minimal_parse(self):
        config = pipeline_config_from_dict({"world": {"m": 2, "k": 8, "A": 4, "pool_sizes": [20, 20]}})
        assert config.verify_seeds == 3
