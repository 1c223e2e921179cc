import math

import numpy as np
import pytest

from memnav.percept import NoiseParams, ObjectQuery, exact_query, observe
from memnav.rng import substream
from memnav.scene import assemble_scene
from memnav.sim import SensorConfig, SimState


def room_with_object(center=(7.5, 5.5), cells=(2, 2), width=44, height=44):
    return assemble_scene(width, height, objects=[(0, center, cells, "chair")])


class TestObserve:
    def test_zero_noise_exact_box_and_embeddings(self):
        scene = room_with_object()
        st = SimState(scene, (5.5, 5.5, 0.0))
        frame = st.sense()
        (q,) = observe(frame, scene, NoiseParams.zero(), seed=0)
        obj = scene.objects[0]
        assert q.box.center == pytest.approx(obj.box.center)
        assert q.box.size == pytest.approx(obj.box.size)
        assert float(np.dot(q.vocab_embedding, obj.category_embedding)) == pytest.approx(1.0)
        assert float(np.dot(q.feature, obj.instance_embedding)) == pytest.approx(1.0)
        assert q.merge_count == 1
        assert q.source_id == 0

    def test_score_floor_at_max_range(self):
        # Object centered exactly at the 5 m range limit: clamp floor 0.05.
        scene = room_with_object(center=(10.5, 5.5), width=60)
        st = SimState(scene, (5.5, 5.5, 0.0))
        frame = st.sense()
        assert 0 in frame.visible_ids
        (q,) = observe(frame, scene, NoiseParams.zero(), seed=0)
        assert q.score == pytest.approx(0.05)

    def test_score_distance_decay(self):
        scene = room_with_object(center=(8.0, 5.5))
        st = SimState(scene, (5.5, 5.5, 0.0))
        (q,) = observe(st.sense(), scene, NoiseParams.zero(), seed=0)
        assert q.score == pytest.approx(1.0 - 2.5 / 5.0)

    def test_noise_matches_reference_reexecution(self):
        scene = room_with_object()
        st = SimState(scene, (5.5, 5.5, 0.0))
        frame = st.sense()
        noise = NoiseParams(sigma_center=0.1, sigma_size=0.05, sigma_vocab=0.03,
                            sigma_feature=0.02)
        (q,) = observe(frame, scene, noise, seed=77)

        obj = scene.objects[0]
        rng = substream("percept", 77, frame.timestamp, 0)
        center = np.asarray(obj.box.center) + 0.1 * rng.standard_normal(3)
        size = np.asarray(obj.box.size) * np.exp(0.05 * rng.standard_normal(3))
        vocab = obj.category_embedding + 0.03 * rng.standard_normal(32)
        vocab /= np.linalg.norm(vocab)
        feat = obj.instance_embedding + 0.02 * rng.standard_normal(32)
        feat /= np.linalg.norm(feat)
        assert np.asarray(q.box.center) == pytest.approx(center, abs=1e-9)
        assert np.asarray(q.box.size) == pytest.approx(size, abs=1e-9)
        assert q.vocab_embedding == pytest.approx(vocab, abs=1e-9)
        assert q.feature == pytest.approx(feat, abs=1e-9)

    def test_determinism(self):
        scene = room_with_object()
        st = SimState(scene, (5.5, 5.5, 0.0))
        frame = st.sense()
        a = observe(frame, scene, NoiseParams(), seed=5)
        b = observe(frame, scene, NoiseParams(), seed=5)
        assert np.asarray(a[0].box.center) == pytest.approx(np.asarray(b[0].box.center))
        assert (a[0].vocab_embedding == b[0].vocab_embedding).all()

    def test_only_visible_objects_emitted(self):
        from memnav.scene import WallSegment

        wall = WallSegment(6.625, 4.625, 6.625, 6.625)
        scene = assemble_scene(
            44, 44, extra_walls=[wall],
            objects=[(0, (7.5, 5.625), (2, 2), "chair"),
                     (1, (4.0, 5.625), (2, 2), "table")],
        )
        st = SimState(scene, (5.5, 5.625, math.pi))  # facing the visible one
        frame = st.sense()
        queries = observe(frame, scene, NoiseParams.zero(), seed=0)
        assert [q.source_id for q in queries] == [1]

    def test_size_stays_positive_under_heavy_noise(self):
        scene = room_with_object()
        st = SimState(scene, (5.5, 5.5, 0.0))
        frame = st.sense()
        for seed in range(50):
            (q,) = observe(frame, scene, NoiseParams(sigma_size=1.5), seed=seed)
            assert min(q.box.size) > 0

    def test_mask_is_facing_footprint_column(self):
        scene = room_with_object(center=(7.5, 5.5), cells=(2, 2))
        st = SimState(scene, (5.5, 5.5, 0.0))  # west of the object
        (q,) = observe(st.sense(), scene, NoiseParams.zero(), seed=0)
        nx, _ = scene.cells
        cells = sorted((cid % nx, cid // nx) for cid in q.mask)
        xs = {c[0] for c in cells}
        assert len(cells) == 2        # west face of a 2x2 footprint
        assert xs == {int(7.25 / 0.25)}  # the column nearest the agent

    def test_score_bounds_invariant(self):
        scene = room_with_object()
        for d in (6.0, 6.5, 7.0, 8.0, 9.5):
            st = SimState(scene, (d, 5.5, math.pi))
            frame = st.sense()
            for q in observe(frame, scene, NoiseParams(), seed=1):
                assert 0.05 <= q.score <= 1.0


class TestExactQuery:
    def test_full_footprint_mask_and_exact_fields(self):
        scene = room_with_object(cells=(2, 3))
        q = exact_query(scene, 0)
        assert q.score == 1.0
        assert len(q.mask) == 6
        obj = scene.objects[0]
        assert q.box.center == obj.box.center
        assert (q.vocab_embedding == obj.category_embedding).all()
