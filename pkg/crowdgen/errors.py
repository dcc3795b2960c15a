from typing import Optional


class CrowdgenError(Exception):
    pass


class ValidationError(CrowdgenError, ValueError):
    pass


class DimensionMismatch(ValidationError):
    pass


class DecisionError(CrowdgenError):
    def __init__(self, agent: int, step: int, cause: BaseException) -> None:
        super().__init__(f'decision failed for agent {agent} at step {step}: {cause!r}')
        self.agent = agent
        self.step = step
        self.cause = cause


class Infeasible(CrowdgenError):
    """Raised by the 2-D linear program when the half-planes and the disc do not intersect.

    `index` is the first constraint that could not be satisfied and `partial` the optimum over
    the constraints before it, which is where the safest-velocity search resumes.
    """

    def __init__(self, index: int, partial) -> None:
        super().__init__(f'linear program infeasible at constraint {index}')
        self.index = index
        self.partial = partial


class PlacementFailure(CrowdgenError):
    pass


class DegenerateKernel(CrowdgenError):
    pass


class NoPath(CrowdgenError):
    pass


class NonFiniteLoss(CrowdgenError):
    def __init__(self, index: int, value: float) -> None:
        super().__init__(f'non-finite loss {value} at batch {index}')
        self.index = index
        self.value = value


class MissingReport(CrowdgenError):
    pass


class MalformedRow(ValidationError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f'line {line}: {reason}')
        self.line = line


class StageError(CrowdgenError):
    def __init__(self, stage: str, cause: Optional[BaseException] = None) -> None:
        super().__init__(f'stage {stage!r} failed: {cause!r}')
        self.stage = stage
        self.cause = cause
