class DegenerateTableError(ValueError):
    """A genotype table carries too little information for the requested statistic."""


class ZeroVarianceError(DegenerateTableError):
    """The null variance of a trend statistic is zero."""
