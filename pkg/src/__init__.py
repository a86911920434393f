"""L2 geodesic-ball discrepancy of weighted point sets on two-point homogeneous spaces."""

__version__ = "0.1.0"
