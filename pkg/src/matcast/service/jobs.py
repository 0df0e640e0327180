"""In-process asynchronous job execution.

Real generation runs tens of seconds per edit, far past sane request
timeouts, so every expensive endpoint returns a job to poll. One worker
pool per process, no external queue; the scheduler is the single place in
the service with shared mutable state.
"""

from __future__ import annotations

import queue
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable

from matcast.errors import MatcastError

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"

ProgressSetter = Callable[[float], None]


@dataclass
class Job:
    id: str
    kind: str
    status: str = QUEUED
    progress: float = 0.0
    result: dict | None = None
    error: dict | None = None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "progress": self.progress,
            "result": self.result,
            "error": self.error,
        }


class JobScheduler:
    """Fixed worker pool draining a FIFO queue of job callables.

    Status transitions are monotone: queued -> running -> done|failed,
    and progress never decreases.
    """

    def __init__(self, workers: int = 2):
        self._queue: queue.Queue = queue.Queue()
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._threads = [
            threading.Thread(target=self._run, name=f"matcast-worker-{i}", daemon=True)
            for i in range(workers)
        ]
        for thread in self._threads:
            thread.start()

    def submit(self, kind: str, fn: Callable[[ProgressSetter], dict]) -> Job:
        job = Job(id=uuid.uuid4().hex[:16], kind=kind)
        with self._lock:
            self._jobs[job.id] = job
        self._queue.put((job.id, fn))
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def _set_progress(self, job: Job, fraction: float) -> None:
        with self._lock:
            job.progress = min(1.0, max(job.progress, float(fraction)))

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                job_id, fn = self._queue.get(timeout=0.1)
            except queue.Empty:
                continue
            job = self.get(job_id)
            with self._lock:
                job.status = RUNNING
            try:
                result = fn(lambda fraction: self._set_progress(job, fraction))
            except MatcastError as exc:
                with self._lock:
                    job.status = FAILED
                    job.error = {
                        "type": type(exc).__name__,
                        "message": str(exc),
                        "stage": getattr(exc, "stage", None),
                    }
            except Exception as exc:  # defensive: never kill a worker
                with self._lock:
                    job.status = FAILED
                    job.error = {"type": type(exc).__name__, "message": str(exc), "stage": None}
            else:
                with self._lock:
                    job.status = DONE
                    job.progress = 1.0
                    job.result = result
            finally:
                self._queue.task_done()

    def shutdown(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=2.0)
