"""Plan execution semantics, reorder/rollback rules and persistence."""

import numpy as np
import pytest

from conftest import random_image, rect_mask, solid_image
from matcast.errors import InvalidInputError, InvalidReorderError, PlanError
from matcast.generation import GenerationParams, MaterialExemplar, Pipeline, transfer_material
from matcast.imaging import ForegroundMask
from matcast.session import (
    DONE,
    FAILED,
    PENDING,
    EditStep,
    SessionStore,
    add_step,
    apply_plan,
    new_session,
    reorder_steps,
    reroll_step,
    rollback,
)
from matcast.store import AssetStore


@pytest.fixture
def store(tmp_path):
    return AssetStore(tmp_path / "assets")


@pytest.fixture
def pipeline():
    return Pipeline()


def make_session(store, rng, masks, size=32):
    """Session over a random base image with one step per mask."""
    base = random_image(rng, size, size)
    base_record = store.put_image(base)
    session = new_session(base_record.id)
    colors = [(220, 30, 30), (30, 220, 30), (30, 30, 220)]
    exemplars = []
    for index, mask in enumerate(masks):
        mask_record = store.put_mask(mask)
        exemplar_image = solid_image(4, 4, colors[index % 3])
        ex_record = store.put_image(exemplar_image, kind="exemplar")
        add_step(session, EditStep(
            region=mask_record.id,
            exemplar_image=ex_record.id,
            params=GenerationParams(seed=100 + index, working_size=size),
        ))
        exemplars.append(MaterialExemplar(image=exemplar_image))
    return base, session, exemplars


class TestApplyPlan:
    def test_empty_plan_unchanged(self, store, pipeline, rng):
        base = random_image(rng, 16, 16)
        session = new_session(store.put_image(base).id)
        before = session.updated
        out = apply_plan(session, pipeline, store)
        assert out.steps == [] and out.history == []
        assert out.current_image_id() == session.base_image
        assert out.updated == before

    def test_two_disjoint_steps_match_manual_fold(self, store, pipeline, rng):
        masks = [rect_mask(32, 32, 2, 10, 2, 10), rect_mask(32, 32, 20, 30, 20, 30)]
        base, session, exemplars = make_session(store, rng, masks)
        apply_plan(session, pipeline, store)
        assert [s.status for s in session.steps] == [DONE, DONE]

        first = transfer_material(
            base, masks[0], exemplars[0], GenerationParams(seed=100, working_size=32)
        )
        second = transfer_material(
            first.image, masks[1], exemplars[1], GenerationParams(seed=101, working_size=32)
        )
        final = store.load_image(session.current_image_id())
        assert np.array_equal(final.data, second.image.data)
        assert len(session.history) == 2
        assert session.history[1]["request_digest"] == second.request_digest

    def test_disjoint_steps_commute(self, store, pipeline, rng):
        # feathered supports must stay disjoint for the swap to commute
        masks = [rect_mask(48, 48, 2, 10, 2, 10), rect_mask(48, 48, 30, 44, 30, 44)]
        base, session, _ = make_session(store, rng, masks, size=48)
        apply_plan(session, pipeline, store)
        forward = store.load_image(session.current_image_id())

        base2, session2, _ = make_session(store, rng, masks, size=48)
        # rebuild against the same base image: reuse the original base asset
        session2.base_image = session.base_image
        session2.steps[0], session2.steps[1] = session2.steps[1], session2.steps[0]
        # swap seeds so each (mask, exemplar, seed) triple is preserved
        s0, s1 = session2.steps[0].params, session2.steps[1].params
        session2.steps[0].params = s0
        session2.steps[1].params = s1
        apply_plan(session2, pipeline, store)
        swapped = store.load_image(session2.current_image_id())
        assert np.array_equal(forward.data, swapped.data)

    def test_overlapping_steps_order_sensitive(self, store, pipeline, rng):
        masks = [rect_mask(32, 32, 8, 24, 8, 24), rect_mask(32, 32, 12, 28, 12, 28)]
        base, session, _ = make_session(store, rng, masks)
        apply_plan(session, pipeline, store)
        forward = store.load_image(session.current_image_id())

        _, session2, _ = make_session(store, rng, masks)
        session2.base_image = session.base_image
        reorder_steps(session2, [1, 0])
        apply_plan(session2, pipeline, store)
        swapped = store.load_image(session2.current_image_id())
        assert not np.array_equal(forward.data, swapped.data)

    def test_partial_apply_leaves_rest_pending(self, store, pipeline, rng):
        masks = [rect_mask(32, 32, 2, 10, 2, 10), rect_mask(32, 32, 20, 30, 20, 30)]
        _, session, _ = make_session(store, rng, masks)
        apply_plan(session, pipeline, store, up_to=0)
        assert [s.status for s in session.steps] == [DONE, PENDING]
        assert len(session.history) == 1

    def test_failure_recorded_on_step(self, store, pipeline, rng):
        empty = ForegroundMask.empty(32, 32)
        good = rect_mask(32, 32, 4, 12, 4, 12)
        _, session, _ = make_session(store, rng, [empty, good])
        apply_plan(session, pipeline, store)
        assert session.steps[0].status == FAILED
        assert "EmptyMaskError" in session.steps[0].error
        assert session.steps[1].status == PENDING
        assert session.history == []

    def test_missing_asset_is_plan_error(self, store, pipeline, rng):
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 4, 12, 4, 12)])
        session.steps[0].region = "0" * 64
        with pytest.raises(PlanError, match="step 0"):
            apply_plan(session, pipeline, store)

    def test_up_to_out_of_range(self, store, pipeline, rng):
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 4, 12, 4, 12)])
        with pytest.raises(PlanError):
            apply_plan(session, pipeline, store, up_to=5)


class TestReorder:
    def test_identity_permutation(self, store, pipeline, rng):
        _, session, _ = make_session(
            store, rng, [rect_mask(32, 32, 2, 8, 2, 8), rect_mask(32, 32, 20, 28, 20, 28)]
        )
        order_before = [s.region for s in session.steps]
        reorder_steps(session, [0, 1])
        assert [s.region for s in session.steps] == order_before

    def test_swap_pending_steps(self, store, pipeline, rng):
        _, session, _ = make_session(
            store, rng, [rect_mask(32, 32, 2, 8, 2, 8), rect_mask(32, 32, 20, 28, 20, 28)]
        )
        regions = [s.region for s in session.steps]
        history_before = list(session.history)
        reorder_steps(session, [1, 0])
        assert [s.region for s in session.steps] == regions[::-1]
        assert session.history == history_before

    def test_done_step_immovable(self, store, pipeline, rng):
        _, session, _ = make_session(
            store, rng, [rect_mask(32, 32, 2, 8, 2, 8), rect_mask(32, 32, 20, 28, 20, 28)]
        )
        apply_plan(session, pipeline, store, up_to=0)
        with pytest.raises(InvalidReorderError):
            reorder_steps(session, [1, 0])

    def test_bad_permutation(self, store, pipeline, rng):
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 2, 8, 2, 8)])
        with pytest.raises(InvalidInputError):
            reorder_steps(session, [0, 0])


class TestRollback:
    def _applied_session(self, store, pipeline, rng):
        masks = [rect_mask(32, 32, 2, 10, 2, 10), rect_mask(32, 32, 20, 30, 20, 30)]
        _, session, _ = make_session(store, rng, masks)
        apply_plan(session, pipeline, store)
        return session

    def test_rollback_to_last_done_is_noop(self, store, pipeline, rng):
        session = self._applied_session(store, pipeline, rng)
        current = session.current_image_id()
        rollback(session, 2)
        assert session.current_image_id() == current

    def test_rollback_to_zero_restores_base(self, store, pipeline, rng):
        session = self._applied_session(store, pipeline, rng)
        rollback(session, 0)
        assert session.current_image_id() == session.base_image
        assert all(s.status == PENDING for s in session.steps)

    def test_history_survives_rollback(self, store, pipeline, rng):
        session = self._applied_session(store, pipeline, rng)
        history = list(session.history)
        rollback(session, 0)
        assert session.history == history

    def test_replay_reproduces_state(self, store, pipeline, rng):
        session = self._applied_session(store, pipeline, rng)
        final_before = session.current_image_id()
        rollback(session, 1)
        apply_plan(session, pipeline, store)
        assert session.current_image_id() == final_before
        # history grew: replay appended a (deduplicated) result record
        assert len(session.history) == 3
        assert session.history[1]["result"] == session.history[2]["result"]

    def test_invalid_index(self, store, pipeline, rng):
        session = self._applied_session(store, pipeline, rng)
        with pytest.raises(InvalidInputError):
            rollback(session, 3)


class TestReroll:
    def test_reroll_pending(self, store, pipeline, rng):
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 4, 12, 4, 12)])
        reroll_step(session, 0, seed=999)
        assert session.steps[0].params.seed == 999

    def test_reroll_done_rejected(self, store, pipeline, rng):
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 4, 12, 4, 12)])
        apply_plan(session, pipeline, store)
        with pytest.raises(PlanError):
            reroll_step(session, 0, seed=5)


class TestPersistence:
    def test_roundtrip(self, tmp_path, rng):
        session_store = SessionStore(tmp_path)
        store = session_store.assets
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 4, 12, 4, 12)])
        apply_plan(session, Pipeline(), store)
        session.extras["segmentation_masks"] = ["abc"]
        session_store.save(session)

        loaded = session_store.load(session.id)
        assert loaded.id == session.id
        assert loaded.base_image == session.base_image
        assert [s.to_record() for s in loaded.steps] == [s.to_record() for s in session.steps]
        assert loaded.history == session.history
        assert loaded.extras["segmentation_masks"] == ["abc"]
        assert session_store.ids() == [session.id]

    def test_history_log_append_only(self, tmp_path, rng):
        session_store = SessionStore(tmp_path)
        store = session_store.assets
        _, session, _ = make_session(store, rng, [rect_mask(32, 32, 4, 12, 4, 12)])
        session_store.save(session)
        apply_plan(session, Pipeline(), store)
        session_store.save(session)
        log = (session_store.root / "sessions" / session.id / "history.log").read_text()
        assert len(log.strip().splitlines()) == 1
        # saving again does not duplicate lines
        session_store.save(session)
        log2 = (session_store.root / "sessions" / session.id / "history.log").read_text()
        assert log == log2

    def test_content_addressed_dedup(self, tmp_path, rng):
        session_store = SessionStore(tmp_path)
        store = session_store.assets
        masks = [rect_mask(32, 32, 4, 12, 4, 12)]
        _, session, _ = make_session(store, rng, masks)
        apply_plan(session, Pipeline(), store)
        first_result = session.steps[0].result
        rollback(session, 0)
        apply_plan(session, Pipeline(), store)
        assert session.steps[0].result == first_result
