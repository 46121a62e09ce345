from models.errors import ConfigError
from solvers.branch_and_bound import BranchAndBoundSolver
from solvers.brute_force import BruteForceSolver


class SolverFactory:
    def __init__(self):
        self._default = BranchAndBoundSolver
        # Mapeamento nome -> Classe
        self._map = {
            'bnb': BranchAndBoundSolver,
            'branch_and_bound': BranchAndBoundSolver,
            'brute': BruteForceSolver,
            'brute_force': BruteForceSolver,
        }

    def get_solver(self, name=None):
        """Seleciona o resolvedor pelo nome; sem nome, usa o branch-and-bound."""
        if not name:
            return self._default()
        solver_cls = self._map.get(name.lower())
        if solver_cls is None:
            raise ConfigError(f"Resolvedor desconhecido: '{name}' (opções: {', '.join(self.names())})")
        return solver_cls()

    def names(self):
        return sorted(self._map)
