class SPException(Exception):
    """
    Base exception of the dyadic toolkit
    """

    def __init__(self, *args):
        super().__init__(*args)

    def __str__(self) -> str:
        return 'Dyadic toolkit error'


class ParameterError(SPException):
    """
    Raised when a numeric parameter is outside its admissible range
    """

    def __init__(self, name: str, value, requirement: str, *args):
        """
        Constructor
        @param name: parameter name as used in the signature
        @param value: rejected value
        @param requirement: human readable admissible range
        """
        super().__init__(name, value, requirement, *args)
        self.name = name
        self.value = value
        self.requirement = requirement

    def __str__(self) -> str:
        return f'Parameter {self.name}={self.value!r} violates {self.requirement}'


class CompatibilityError(SPException):
    """
    Raised when grid objects over different roots or levels are combined
    """

    def __init__(self, left: str, right: str, *args):
        super().__init__(left, right, *args)
        self.left = left
        self.right = right

    def __str__(self) -> str:
        return f'Incompatible grids: {self.left} vs {self.right}'


class ResolutionError(SPException):
    """
    Raised when a dyadic cube is finer than the grid
    """

    def __init__(self, depth: int, level: int, *args):
        super().__init__(depth, level, *args)
        self.depth = depth
        self.level = level

    def __str__(self) -> str:
        return f'Dyadic cube of depth {self.depth} is finer than the grid level {self.level}'


class NonFiniteSampleError(SPException):
    """
    Raised when a sampler returns inf or nan
    """

    def __init__(self, cell: tuple, value: float, *args):
        super().__init__(cell, value, *args)
        self.cell = cell
        self.value = value

    def __str__(self) -> str:
        return f'Non-finite sample {self.value} at cell {self.cell}'


class DegenerateWeightError(SPException):
    """
    Raised when a weight vanishes where a weighted average is required
    """

    def __init__(self, where: str, value: float = 0.0, *args):
        super().__init__(where, value, *args)
        self.where = where
        self.value = value

    def __str__(self) -> str:
        return f'Degenerate weight on {self.where} (value {self.value})'


class SingularSampleError(SPException):
    """
    Raised when a distance weight with negative exponent is sampled on its singular set
    """

    def __init__(self, point: tuple, gamma: float, *args):
        super().__init__(point, gamma, *args)
        self.point = point
        self.gamma = gamma

    def __str__(self) -> str:
        return f'Point {self.point} lies on the singular set of a distance weight with gamma={self.gamma}'


class AdmissibilityError(SPException):
    """
    Raised when a trial cube does not satisfy its containment hypothesis
    """

    def __init__(self, cube, requirement: str, *args):
        super().__init__(cube, requirement, *args)
        self.cube = cube
        self.requirement = requirement

    def __str__(self) -> str:
        return f'Cube {self.cube} is not admissible: {self.requirement}'


class SupportError(SPException):
    """
    Raised when a test bump is not compactly supported in the domain
    """

    def __init__(self, bump, *args):
        super().__init__(bump, *args)
        self.bump = bump

    def __str__(self) -> str:
        return f'Support of {self.bump} exits the domain'


class SparsityError(SPException):
    """
    Raised when a carved family violates its sparsity or disjointness contract
    """

    def __init__(self, cube, measured: float, bound: float, condition: str, *args):
        super().__init__(cube, measured, bound, condition, *args)
        self.cube = cube
        self.measured = measured
        self.bound = bound
        self.condition = condition

    def __str__(self) -> str:
        return f'Sparse cube {self.cube} violates {self.condition}: measured {self.measured}, bound {self.bound}'


class CoverageError(SPException):
    """
    Raised when the Whitney selection cannot cover the raster at the grid level
    """

    def __init__(self, cells: list, *args):
        super().__init__(cells, *args)
        self.cells = cells

    def __str__(self) -> str:
        shown = ', '.join(str(cell) for cell in self.cells[:8])
        more = f' and {len(self.cells) - 8} more' if len(self.cells) > 8 else ''
        return f'{len(self.cells)} raster cells are not covered by admissible cubes: {shown}{more}'


class ChainConstructionError(SPException):
    """
    Raised when the Whitney adjacency graph is disconnected
    """

    def __init__(self, components: list, *args):
        super().__init__(components, *args)
        self.components = components

    def __str__(self) -> str:
        sizes = [len(component) for component in self.components]
        return f'Adjacency graph has {len(self.components)} components of sizes {sizes}'


class ConfigError(SPException):
    """
    Raised for unreadable or invalid configuration
    """

    def __init__(self, key: str, reason: str, *args):
        super().__init__(key, reason, *args)
        self.key = key
        self.reason = reason

    def __str__(self) -> str:
        return f'Invalid configuration {self.key}: {self.reason}'
