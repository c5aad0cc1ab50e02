"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside its documented domain."""


class InvalidModelError(ValueError):
    """Training data cannot produce, or a file does not describe, a valid model."""


class DetectionInfeasibleError(RuntimeError):
    """At least one model cluster has no candidate placement on the edge map."""

    def __init__(self, empty_clusters, message=None):
        self.empty_clusters = list(empty_clusters)
        if message is None:
            message = "no candidate placements for clusters %s" % self.empty_clusters
        super().__init__(message)
