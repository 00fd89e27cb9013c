"""Exception types shared across modules."""


class CapacityError(Exception):
    """A requested table or search space exceeds its configured cap."""


class CommutationError(Exception):
    """Two observables that were required to commute do not."""

    def __init__(self, i: int, j: int, norm: float, tol: float):
        self.pair = (i, j)
        self.norm = norm
        super().__init__(
            f"observables {i} and {j} do not commute: "
            f"max|[a_{i},a_{j}]| = {norm:.3e} > {tol:.1e}"
        )


class ContractViolationError(Exception):
    """A pluggable component emitted a value outside its declared contract."""
