"""Ordered multi-object editing: plans, sequential application, rollback
and on-disk session persistence.

A plan is a fold: each step's input image is the previous step's output
(the base image for step 0), so step order is significant and overlapping
regions resolve to whichever step ran later. Seeds are frozen per step at
creation; rerolling is an explicit action that assigns a new seed.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

from matcast.errors import (
    InvalidInputError,
    InvalidReorderError,
    MatcastError,
    PlanError,
    StorageError,
)
from matcast.generation import GenerationParams, MaterialExemplar, Pipeline, ProgressFn
from matcast.imaging import DEFAULT_FEATHER, RasterImage
from matcast.store import AssetStore

PENDING = "pending"
DONE = "done"
FAILED = "failed"


@dataclass
class EditStep:
    """One (region, exemplar) edit with frozen parameters."""

    region: str
    exemplar_image: str
    params: GenerationParams
    crop: tuple[int, int, int, int] | None = None
    scale_hint: float | None = None
    text_hint: str | None = None
    feather: int = DEFAULT_FEATHER
    status: str = PENDING
    result: str | None = None
    error: str | None = None

    def to_record(self) -> dict:
        return {
            "region": self.region,
            "exemplar": {
                "image": self.exemplar_image,
                "crop": list(self.crop) if self.crop else None,
                "scale_hint": self.scale_hint,
                "text_hint": self.text_hint,
            },
            "params": self.params.to_record(),
            "feather": self.feather,
            "status": self.status,
            "result": self.result,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, record: dict) -> "EditStep":
        ex = record["exemplar"]
        return cls(
            region=record["region"],
            exemplar_image=ex["image"],
            params=GenerationParams.from_record(record["params"]),
            crop=tuple(ex["crop"]) if ex.get("crop") else None,
            scale_hint=ex.get("scale_hint"),
            text_hint=ex.get("text_hint"),
            feather=int(record.get("feather", DEFAULT_FEATHER)),
            status=record.get("status", PENDING),
            result=record.get("result"),
            error=record.get("error"),
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionState:
    """A plan over a base image plus its append-only execution history."""

    id: str
    base_image: str
    steps: list[EditStep] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    created: str = ""
    updated: str = ""
    extras: dict = field(default_factory=dict)

    def done_count(self) -> int:
        return sum(1 for s in self.steps if s.status == DONE)

    def current_image_id(self) -> str:
        """Base image folded through the done steps, i.e. the last result."""
        current = self.base_image
        for step in self.steps:
            if step.status == DONE:
                current = step.result
        return current

    def touch(self) -> None:
        self.updated = _now()


def new_session(base_image: str) -> SessionState:
    now = _now()
    return SessionState(id=uuid.uuid4().hex[:12], base_image=base_image, created=now, updated=now)


def add_step(session: SessionState, step: EditStep) -> SessionState:
    session.steps.append(step)
    session.touch()
    return session


def reroll_step(session: SessionState, index: int, seed: int) -> SessionState:
    """Assign a fresh seed to a pending step."""
    if not 0 <= index < len(session.steps):
        raise InvalidInputError(f"no step at index {index}")
    step = session.steps[index]
    if step.status == DONE:
        raise PlanError(f"step {index} is done; roll back before rerolling")
    step.params = replace(step.params, seed=seed)
    step.status = PENDING
    step.error = None
    session.touch()
    return session


def apply_plan(
    session: SessionState,
    pipeline: Pipeline,
    store: AssetStore,
    up_to: int | None = None,
    progress: ProgressFn | None = None,
) -> SessionState:
    """Execute unfinished steps through ``up_to`` (inclusive), in order.

    Each step consumes the previous step's output. A failure is recorded
    on the failing step and execution stops, leaving later steps pending.
    """
    if up_to is None:
        up_to = len(session.steps) - 1
    if up_to >= len(session.steps):
        raise PlanError(f"plan has {len(session.steps)} steps; cannot apply through {up_to}")

    for index in range(up_to + 1):
        step = session.steps[index]
        for label, asset_id in (("region", step.region), ("exemplar", step.exemplar_image)):
            if not store.exists(asset_id):
                raise PlanError(f"step {index}: {label} asset {asset_id!r} is missing")
    if not store.exists(session.base_image):
        raise PlanError(f"base image asset {session.base_image!r} is missing")

    current: RasterImage | None = None
    for index in range(up_to + 1):
        step = session.steps[index]
        if step.status == DONE:
            current = None  # lazily reloaded from the step result if needed
            continue
        if current is None:
            current = store.load_image(session.current_image_id())
        exemplar = MaterialExemplar(
            image=store.load_image(step.exemplar_image),
            crop=step.crop,
            scale_hint=step.scale_hint,
            text_hint=step.text_hint,
        )
        mask = store.load_mask(step.region)
        try:
            result = replace(pipeline, feather=step.feather).transfer(
                current, mask, exemplar, step.params, progress=progress
            )
        except MatcastError as exc:
            step.status = FAILED
            step.error = f"{type(exc).__name__}: {exc}"
            session.touch()
            break
        record = store.put_image(result.image, kind="result")
        step.status = DONE
        step.result = record.id
        step.error = None
        session.history.append(
            {
                "ts": _now(),
                "step": index,
                "result": record.id,
                "request_digest": result.request_digest,
            }
        )
        current = result.image
        session.touch()
    return session


def reorder_steps(session: SessionState, permutation: list[int]) -> SessionState:
    """Reorder the plan; done steps are immovable."""
    n = len(session.steps)
    if sorted(permutation) != list(range(n)):
        raise InvalidInputError(f"permutation must rearrange exactly {n} step indices")
    for new_pos, old_pos in enumerate(permutation):
        if session.steps[old_pos].status == DONE and new_pos != old_pos:
            raise InvalidReorderError(f"step {old_pos} is done and cannot move")
    session.steps = [session.steps[i] for i in permutation]
    session.touch()
    return session


def rollback(session: SessionState, to_index: int) -> SessionState:
    """Reset steps after the first ``to_index`` done steps to pending.

    Results stay in the history for audit; the current image becomes the
    fold of the remaining done prefix.
    """
    done = session.done_count()
    if not 0 <= to_index <= done:
        raise InvalidInputError(f"rollback index {to_index} exceeds {done} done steps")
    seen = 0
    for step in session.steps:
        if step.status == DONE:
            seen += 1
            if seen > to_index:
                step.status = PENDING
                step.result = None
    session.touch()
    return session


class SessionStore:
    """Persists sessions as a directory: manifest.json, content-addressed
    assets, and an append-only history log (one JSON record per line)."""

    def __init__(self, root: str | Path, assets: AssetStore | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.assets = assets if assets is not None else AssetStore(self.root / "assets")

    def _dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def ids(self) -> list[str]:
        base = self.root / "sessions"
        if not base.exists():
            return []
        return sorted(p.name for p in base.iterdir() if (p / "manifest.json").exists())

    def exists(self, session_id: str) -> bool:
        return (self._dir(session_id) / "manifest.json").exists()

    def save(self, session: SessionState) -> None:
        directory = self._dir(session.id)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "id": session.id,
            "created": session.created,
            "updated": session.updated,
            "base_image": session.base_image,
            "steps": [s.to_record() for s in session.steps],
            "extras": session.extras,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        log = directory / "history.log"
        flushed = 0
        if log.exists():
            with log.open() as fh:
                flushed = sum(1 for _ in fh)
        if flushed > len(session.history):
            raise StorageError(
                f"session {session.id}: history has {len(session.history)} entries "
                f"but the log already holds {flushed}; history is append-only"
            )
        with log.open("a") as fh:
            for entry in session.history[flushed:]:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def load(self, session_id: str) -> SessionState:
        directory = self._dir(session_id)
        try:
            manifest = json.loads((directory / "manifest.json").read_text())
        except FileNotFoundError:
            raise StorageError(f"no session with id {session_id!r}") from None
        history = []
        log = directory / "history.log"
        if log.exists():
            with log.open() as fh:
                history = [json.loads(line) for line in fh if line.strip()]
        return SessionState(
            id=manifest["id"],
            base_image=manifest["base_image"],
            steps=[EditStep.from_record(r) for r in manifest["steps"]],
            history=history,
            created=manifest["created"],
            updated=manifest["updated"],
            extras=manifest.get("extras", {}),
        )
