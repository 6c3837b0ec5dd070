"""Simulator for deferred f+1 replication of MapReduce jobs across clouds."""
from .core import (CloudId, DataPartition, Digest, FaultMode, FaultToleranceConfig, JobSpec, Phase,
                   canonical_digest)
from .protocol import JobFailed, Workload, submit_job

__version__ = "0.1.0"

__all__ = [
    "CloudId", "DataPartition", "Digest", "FaultMode", "FaultToleranceConfig", "JobSpec", "Phase",
    "canonical_digest", "JobFailed", "Workload", "submit_job",
]
