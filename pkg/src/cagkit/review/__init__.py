"""Physician review service: durable annotation/review store + HTTP API."""

from cagkit.review.service import FrameStore, ReviewService, ServiceConfig, serve
from cagkit.review.store import (
    AnnotationRecord,
    ReviewRecord,
    ReviewStore,
    export_review_table,
    find_conflicts,
    render_review_table,
    validate_annotation,
    validate_review,
)

__all__ = [
    "AnnotationRecord",
    "FrameStore",
    "ReviewRecord",
    "ReviewService",
    "ReviewStore",
    "ServiceConfig",
    "export_review_table",
    "find_conflicts",
    "render_review_table",
    "serve",
    "validate_annotation",
    "validate_review",
]
