from solvers.base_solver import BaseSolver


class BruteForceSolver(BaseSolver):
    """Recursão exaustiva sobre todas as partições; oráculo para instâncias pequenas."""

    name = "brute"

    def search(self, on_progress=None):
        self.leaves = 0
        self._visit(0, [])
        if on_progress: on_progress(f"[{self.name}] {self.leaves} partições avaliadas.")
        return self.best[1] if self.leaves else None

    def _visit(self, covered, chosen):
        if covered == self.full:
            self.leaves += 1
            self._offer(chosen)
            return
        customer = self._lowest_uncovered(covered)
        for cid in self.children[customer]:
            if self.masks[cid] & covered:
                continue
            chosen.append(cid)
            self._visit(covered | self.masks[cid], chosen)
            chosen.pop()
