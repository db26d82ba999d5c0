import numpy as np
import pytest

from src.core.config import RecognizerConfig
from src.core.layout import BiosignalGroup, BiosignalLayout, Condition
from src.recognizer.matching import enroll, recognize
from src.recognizer.resample import normalize
from src.synthgen.generator import (
    FUNCTION_LABELS,
    SynthSpec,
    SynthSpecError,
    class_prototypes,
    generate,
    generate_variation,
    with_overrides,
)

# 129 and 33 samples per second: N - 1 is a multiple of 2 * 16 in both groups.
LAYOUT = BiosignalLayout(groups=(BiosignalGroup("emg", 3, 129.0), BiosignalGroup("imu", 2, 33.0)))


def small_spec(**overrides):
    base = dict(
        seed=3,
        classes=3,
        trials_per_class=2,
        layout=LAYOUT,
        active_channels_per_class=3,
        duration_s=1.0,
        participants=2,
        variation_trials=2,
        variation_classes=1,
    )
    base.update(overrides)
    return SynthSpec(**base)


def noiseless(**overrides):
    return small_spec(noise_sigma=0.0, amplitude_jitter=(1.0, 1.0), participant_spread=0.0, **overrides)


def by_condition(corpus, condition):
    return [g for g in corpus.gestures if g.condition is condition]


class TestGenerate:
    def test_same_seed_same_corpus(self):
        a = generate(small_spec())
        b = generate(small_spec())
        assert len(a.gestures) == len(b.gestures)
        for x, y in zip(a.gestures, b.gestures):
            assert (x.label, x.participant, x.condition, x.trial) == (y.label, y.participant, y.condition, y.trial)
            for name in LAYOUT.names:
                np.testing.assert_array_equal(x.samples(name), y.samples(name))

    def test_other_seed_differs(self):
        a = generate(small_spec()).gestures[0]
        b = generate(small_spec(seed=4)).gestures[0]
        assert not np.array_equal(a.samples("emg"), b.samples("emg"))

    def test_counts_and_order(self):
        corpus = generate(small_spec())
        # per participant: 3x2 personalized, 3 kinds x 1 class x 2 variations, 3x2 standardized
        assert len(corpus.gestures) == 2 * (6 + 6 + 6)
        first = corpus.gestures[:18]
        assert {g.participant for g in first} == {"P001"}
        assert [g.condition for g in first[:6]] == [Condition.PERSONALIZED] * 6
        assert first[6].condition is Condition.VARIATION_TIME
        assert [g.condition for g in first[12:]] == [Condition.STANDARDIZED] * 6
        assert {g.label for g in first[6:12]} == {"move"}

    def test_group_shapes_and_scales(self):
        g = generate(small_spec()).gestures[0]
        assert g.samples("emg").shape == (3, 129)
        assert g.samples("imu").shape == (2, 33)
        assert np.abs(g.samples("emg")).max() < 1e-2
        assert np.abs(g.samples("imu")).max() > 1e-2

    def test_standardized_trial_count(self):
        corpus = generate(small_spec(standardized_trials=1, participants=1))
        assert len(by_condition(corpus, Condition.STANDARDIZED)) == 3

    def test_noiseless_trials_are_identical(self):
        corpus = generate(noiseless())
        moves = [g for g in by_condition(corpus, Condition.PERSONALIZED) if g.label == "move"]
        assert len(moves) == 4
        for g in moves[1:]:
            np.testing.assert_array_equal(g.samples("emg"), moves[0].samples("emg"))

    def test_adding_participants_keeps_existing_streams(self):
        one = generate(small_spec(participants=1))
        two = generate(small_spec(participants=2))
        for a, b in zip(one.gestures, two.gestures[: len(one.gestures)]):
            np.testing.assert_array_equal(a.samples("emg"), b.samples("emg"))

    def test_prototype_channels_are_sorted(self):
        protos = class_prototypes(small_spec(active_channels_per_class=2))
        assert all(len(p.active) == 2 for p in protos)
        assert all(list(p.active) == sorted(p.active) for p in protos)

    def test_recognizer_separates_clean_classes(self):
        spec = noiseless(participants=1)
        config = RecognizerConfig(n=16, n_pc=3)
        personal = by_condition(generate(spec), Condition.PERSONALIZED)
        templates = [enroll(g, LAYOUT, config) for g in personal if g.trial == 0]
        for g in personal:
            assert recognize(g, templates, LAYOUT, config).matched_label == g.label


class TestVariations:
    CONFIG = RecognizerConfig(n=17, n_pc=3)

    def _base(self, **overrides):
        spec = noiseless(**overrides)
        return spec, by_condition(generate(spec), Condition.PERSONALIZED)[0]

    def test_speed_keeps_the_resampled_trajectory(self):
        spec, base = self._base()
        fast = generate_variation(base, "speed", spec)
        assert fast.condition is Condition.VARIATION_SPEED
        assert fast.samples("emg").shape[1] == 65
        assert fast.samples("imu").shape[1] == 17
        np.testing.assert_array_equal(fast.samples("emg"), base.samples("emg")[:, ::2])
        np.testing.assert_allclose(
            normalize(fast, LAYOUT, self.CONFIG).data, normalize(base, LAYOUT, self.CONFIG).data, atol=1e-12
        )
        result = recognize(fast, [enroll(base, LAYOUT, self.CONFIG)], LAYOUT, self.CONFIG)
        assert result.distance <= 1e-9

    def test_size_is_invisible_after_normalization(self):
        spec, base = self._base()
        big = generate_variation(base, "size", spec)
        np.testing.assert_allclose(big.samples("imu"), 2.0 * base.samples("imu"))
        np.testing.assert_allclose(
            normalize(big, LAYOUT, self.CONFIG).data, normalize(base, LAYOUT, self.CONFIG).data, atol=1e-12
        )

    def test_time_without_drift_or_noise_is_unchanged(self):
        spec, base = self._base(drift_factor=1.0)
        same = generate_variation(base, "time", spec)
        assert same.condition is Condition.VARIATION_TIME
        np.testing.assert_array_equal(same.samples("emg"), base.samples("emg"))

    def test_time_drift_only_touches_emg(self):
        spec, base = self._base(drift_factor=1.5)
        drifted = generate_variation(base, "time", spec)
        np.testing.assert_allclose(drifted.samples("emg")[:, -1], 1.5 * base.samples("emg")[:, -1])
        np.testing.assert_array_equal(drifted.samples("emg")[:, 0], base.samples("emg")[:, 0])
        np.testing.assert_array_equal(drifted.samples("imu"), base.samples("imu"))

    def test_unknown_kind(self):
        spec, base = self._base()
        with pytest.raises(SynthSpecError, match="unknown variation kind"):
            generate_variation(base, "mirror", spec)


class TestSynthSpec:
    @pytest.mark.parametrize(
        "overrides, message",
        [
            ({"classes": 0}, "classes"),
            ({"active_channels_per_class": 6}, "active_channels_per_class"),
            ({"amplitude_jitter": (1.2, 0.8)}, "amplitude_jitter"),
            ({"duration_s": 0.01}, "too short"),
            ({"speed_factor": 0.0}, "speed_factor"),
            ({"noise_sigma": -1.0}, "noise_sigma"),
        ],
    )
    def test_rejects_bad_values(self, overrides, message):
        with pytest.raises(SynthSpecError, match=message):
            small_spec(**overrides)

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(SynthSpecError, match="shape"):
            SynthSpec.from_dict({"classes": 2, "shape": "circle"})

    def test_dict_form_restores_spec(self):
        spec = small_spec(amplitude_jitter=[0.9, 1.1])
        assert SynthSpec.from_dict(spec.to_dict()) == spec

    def test_labels(self):
        assert SynthSpec(classes=10).labels() == list(FUNCTION_LABELS)
        assert SynthSpec(classes=12).labels()[11] == "gesture_11"

    def test_with_overrides_skips_none(self):
        spec = with_overrides(small_spec(), classes=5, seed=None)
        assert spec.classes == 5
        assert spec.seed == 3

    def test_default_layout_defaults(self):
        spec = SynthSpec()
        assert spec.layout.total_channels == 88
        assert spec.n_standardized == spec.trials_per_class


class TestSeparabilityAudit:
    def test_clean_corpus_is_separable(self):
        pytest.importorskip("faiss")
        from src.synthgen.audit import separability_audit

        gestures = by_condition(generate(noiseless(participants=1)), Condition.PERSONALIZED)
        result = separability_audit(LAYOUT, gestures, RecognizerConfig(n=16, n_pc=3))
        assert result.separable
        assert result.violations == 0
        assert result.max_within <= 0.05
        assert result.to_dict()["gestures"] == 6

    def test_mislabeled_copy_is_a_violation(self):
        pytest.importorskip("faiss")
        from src.synthgen.audit import separability_audit

        g = generate(noiseless(participants=1)).gestures[0]
        twin = g.with_signals({}, label="other")
        result = separability_audit(LAYOUT, [g, twin], RecognizerConfig(n=16, n_pc=3))
        assert not result.separable
        assert result.violations == 2

    def test_flat_index_holds_every_vector(self):
        pytest.importorskip("faiss")
        from src.synthgen.audit import build_l2_index

        vectors = np.random.default_rng(0).normal(size=(5, 8))
        index = build_l2_index(vectors)
        assert index.ntotal == 5
        sq, ids = index.search(vectors.astype(np.float32), 1)
        assert ids[:, 0].tolist() == [0, 1, 2, 3, 4]
