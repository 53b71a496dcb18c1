"""
Celery entry point for distributed checkpoint builds.
"""
from celery.utils.log import get_task_logger

from piltz_lab.celery_utils import celery_app
from piltz_lab.divisor.checkpoints import stride_sum

logger = get_task_logger(__name__)


@celery_app.task(bind=True)
def stride_sum_task(self, k, lo, hi, block_size=None):
    """
    Exact Σ_{lo <= n < hi} d_k(n), returned as a decimal string so the JSON
    result backend never rounds it.
    """
    if not self.request.is_eager and not self.request.called_directly:
        self.update_state(state="PROGRESS", meta={"k": k, "lo": lo, "hi": hi})
    total = stride_sum(k, lo, hi, block_size)
    logger.info("stride_sum k=%s [%s, %s) done", k, lo, hi)
    return str(total)
