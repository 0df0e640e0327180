"""HTTP service: asset upload, sessions, segmentation and edit jobs."""

from matcast.service.app import create_app
from matcast.service.jobs import Job, JobScheduler

__all__ = ["Job", "JobScheduler", "create_app"]
