class EsdgError(Exception):
    """Base class for every error raised by esdgpos."""


class ConfigError(EsdgError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__('invalid configuration:\n' + '\n'.join(f'  - {p}' for p in self.problems))


class OperatorConstructionError(EsdgError):
    pass


class BoundaryConditionError(EsdgError):
    pass


class MeshError(EsdgError):
    pass


class ExactSolutionError(EsdgError):
    pass


class LimiterBoundsError(EsdgError):
    pass


class InadmissibleStateError(EsdgError):
    """A nodal state left the admissible set, or became non-finite.

    The offending location is kept on the exception so callers can report it.
    """

    def __init__(self, message, element=None, node=None, variable=None, value=None, step=None):
        self.element = element
        self.node = node
        self.variable = variable
        self.value = value
        self.step = step
        where = []
        if step is not None:
            where.append(f'step={step}')
        if element is not None:
            where.append(f'element={element}')
        if node is not None:
            where.append(f'node={node}')
        if variable is not None:
            where.append(f'{variable}={value!r}')
        if where:
            message = f'{message} ({", ".join(where)})'
        super().__init__(message)
