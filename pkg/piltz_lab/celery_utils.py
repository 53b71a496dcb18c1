"""
Celery configuration for distributed checkpoint builds.
"""
from celery import Celery

from piltz_lab.config import REDIS_URL

celery_app = Celery("piltz_lab", broker=REDIS_URL, backend=REDIS_URL)

celery_app.conf.update(
    task_track_started=True,
    task_serializer="json",
    result_serializer="json",
    accept_content=["json"],
)
