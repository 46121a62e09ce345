import json
import re
import threading
from pathlib import Path

import numpy as np

from models.cluster import ClusterPool, PenaltyParams
from models.db_handler import DatabaseHandler
from models.errors import ConfigError, InfeasibleError, InstanceError
from models.instance import generate, load_instance, save_instance, scale, validate
from services import mdp_solver
from services.cluster_generator import (enumerate_clusters, forced_clusters, parse_cluster_spec,
                                        uncovered_customers)
from services.search import (JointEvaluator, cost_increase, default_grids, grid_optima, grid_search,
                             line_search, solution_summary, step_by_step)
from services.simulator import simulate
from services.solver_factory import SolverFactory
from solvers.base_solver import make_selection
from views import reports

SWEEPS = ('m_s', 'm_p', 'm_d')


def parse_list(text, cast=float):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [cast(x) for x in text]
    try:
        return [cast(x) for x in str(text).replace(';', ',').split(',') if x.strip()]
    except ValueError as e:
        raise ConfigError(f"Lista inválida: '{text}'") from e


def parse_pair(text):
    values = parse_list(text)
    if not values or len(values) > 2:
        raise ConfigError(f"Esperado um ou dois valores: '{text}'")
    return (values[0], values[-1]) if len(values) == 1 else tuple(values)


class MainViewModel:

    def __init__(self, out_dir="out"):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.db = DatabaseHandler(str(self.out / "scirp.db"))
        self.factory = SolverFactory()
        self._commands = {
            'gen': self.cmd_gen,
            'clusters': self.cmd_clusters,
            'solve': self.cmd_solve,
            'mdp': self.cmd_mdp,
            'simulate': self.cmd_simulate,
            'search': self.cmd_search,
            'grid': self.cmd_grid,
            'sweep': self.cmd_sweep,
            'report': self.cmd_report,
        }

    def _update_step(self, message, callback):
        self.db.log_event(message)
        if callback:
            callback(message)

    def run_command(self, command, opts, on_status_change, on_error, on_done):
        """Executa o comando em uma thread; o resultado vai para on_done e falhas para on_error."""
        def task():
            try:
                handler = self._commands.get(command)
                if handler is None:
                    raise ConfigError(f"Comando desconhecido: {command}")
                self._update_step(f"Iniciando comando '{command}'...", on_status_change)
                result = handler(opts, on_status_change)
                self._update_step(f"Comando '{command}' finalizado com sucesso!", on_status_change)
                on_done(result)
            except Exception as e:
                self.db.log_event(f"ERRO NO COMANDO {command}: {type(e).__name__}: {e}")
                on_error(e)

        thread = threading.Thread(target=task, daemon=True)
        thread.start()
        return thread

    def close(self):
        self.db.close()

    # --- Subfunções comuns ---

    def _instance(self, opts, on_status):
        path = opts.get('instance')
        if not path:
            raise ConfigError("Informe a instância com --instance.")
        inst = load_instance(path)
        violations = validate(inst)
        if violations:
            raise InstanceError("Instância inválida: " + "; ".join(f"{v.code}: {v.message}" for v in violations))
        self._update_step(f"Instância '{inst.name}' carregada ({inst.n_customers} clientes, T={inst.T}).",
                          on_status)
        return inst

    def _pool(self, inst, opts, on_status):
        self._update_step("Enumerando clusters...", on_status)
        pool = enumerate_clusters(inst, opts.get('threads'), on_progress=lambda m: self._update_step(m, on_status))
        missing = uncovered_customers(pool)
        if missing:
            raise InfeasibleError(f"Clientes sem nenhum cluster viável: {missing}")
        return pool

    @staticmethod
    def _base_params(value):
        """Parâmetros do sistema base: dicionário, texto JSON ou caminho de arquivo JSON."""
        if not value:
            return {}
        if isinstance(value, dict):
            return value
        try:
            path = Path(value)
            text = path.read_text(encoding='utf-8') if path.exists() else value
            params = json.loads(text)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Parâmetros inválidos: {value}") from e
        if not isinstance(params, dict):
            raise ConfigError("Os parâmetros do sistema base devem ser um objeto JSON.")
        return params

    def _params(self, opts):
        return PenaltyParams(float(opts.get('eta1') or 0.0), float(opts.get('eta2') or 0.0))

    def _selection(self, inst, opts, on_status):
        """Seleção informada com --clusters ou obtida do particionamento com (η1, η2)."""
        params = self._params(opts)
        if opts.get('clusters'):
            specs = parse_cluster_spec(opts['clusters'], inst.T)
            clusters = forced_clusters(inst, specs)
            pool = ClusterPool(inst.T, tuple(sorted(inst.customer_ids)), clusters)
            self._update_step(f"{len(clusters)} clusters informados explicitamente.", on_status)
            return make_selection(pool, range(len(clusters)), params)
        pool = self._pool(inst, opts, on_status)
        solver = self.factory.get_solver(opts.get('solver'))
        return solver.solve(pool, params, on_progress=lambda m: self._update_step(m, on_status))

    def _solve_mdp(self, sel, inst, opts, on_status):
        step = int(opts['step'])
        outflow = mdp_solver.build_outflow(sel, inst, step, float(opts['tail_mass']))
        model = mdp_solver.build_model(inst, outflow, step)
        self._update_step(f"Resolvendo MDP ({model.levels} níveis de estoque, passo {step})...", on_status)
        policy = mdp_solver.solve(model, outflow, float(opts['epsilon']), int(opts['max_cycles']),
                                  on_progress=lambda m: self._update_step(m, on_status))
        return policy, outflow, model

    def _evaluator(self, pool, inst, opts, on_status):
        return JointEvaluator(
            pool, inst, step=int(opts['step']), tail_mass=float(opts['tail_mass']),
            epsilon=float(opts['epsilon']), solver=opts.get('solver'), max_cycles=int(opts['max_cycles']),
            on_progress=lambda m: self._update_step(m, on_status),
        )

    def _require_seed(self, opts):
        if opts.get('seed') is None:
            raise ConfigError("Este comando é estocástico: informe --seed.")
        return int(opts['seed'])

    def _dir(self, opts):
        path = Path(opts.get('out') or self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path

    # --- Comandos ---

    def cmd_gen(self, opts, on_status):
        seed = self._require_seed(opts)
        inst = generate(seed, int(opts['n']), int(opts['T']), self._base_params(opts.get('params')), opts['uncertainty'])
        path = self._dir(opts) / f"{inst.name}.json"
        save_instance(inst, path)
        violations = validate(inst)
        self._update_step(f"Instância gerada em {path} ({len(violations)} violações).", on_status)
        return {'instance': str(path), 'violations': [v.code for v in violations]}

    def cmd_clusters(self, opts, on_status):
        inst = self._instance(opts, on_status)
        pool = self._pool(inst, opts, on_status)
        out = self._dir(opts)
        summary = {
            'instance': inst.name,
            'pool_size': len(pool),
            'clusters_per_customer': {str(i): len(pool.containing(i)) for i in pool.customer_ids},
        }
        return {
            'pool': reports.write_pool_jsonl(out / "pool.jsonl", pool),
            'summary': reports.write_json(out / "clusters.json", summary),
            'pool_size': len(pool),
        }

    def cmd_solve(self, opts, on_status):
        inst = self._instance(opts, on_status)
        sel = self._selection(inst, opts, on_status)
        path = reports.write_json(self._dir(opts) / "selection.json", reports.selection_payload(sel))
        return {'selection': path, 'tactical_cost': sel.tactical_cost, 'objective': sel.objective}

    def cmd_mdp(self, opts, on_status):
        inst = self._instance(opts, on_status)
        sel = self._selection(inst, opts, on_status)
        policy, outflow, model = self._solve_mdp(sel, inst, opts, on_status)
        out = self._dir(opts)
        summary = {
            'tactical_cost': sel.tactical_cost,
            'cycle_cost': policy.cycle_cost,
            'gain': policy.gain,
            'total': sel.tactical_cost + policy.cycle_cost,
            'iterations': policy.iterations,
            'bellman_residual': mdp_solver.bellman_residual(model, outflow, policy),
            'outflow': [{'t': t + 1, 'mean': g.mean, 'std': g.std} for t, g in enumerate(outflow.laws)],
            'sS': reports.sS_rows(policy),
        }
        return {
            'policy': reports.write_json(out / "policy.json", reports.policy_payload(policy)),
            'sS': reports.write_sS_csv(out / "sS.csv", policy),
            'summary': reports.write_json(out / "mdp.json", summary),
            'cycle_cost': policy.cycle_cost,
        }

    def cmd_simulate(self, opts, on_status):
        seed = self._require_seed(opts)
        inst = self._instance(opts, on_status)
        sel = self._selection(inst, opts, on_status)
        policy, _, _ = self._solve_mdp(sel, inst, opts, on_status)
        report = simulate(sel, inst, policy, int(opts['periods']), seed, opts['mode'],
                          int(opts['replications']), bool(opts['clamp']), int(opts['trace'] or 0),
                          opts.get('threads'), on_progress=lambda m: self._update_step(m, on_status))
        out = self._dir(opts)
        payload = report.to_dict()
        payload['mdp_cycle_cost'] = policy.cycle_cost
        result = {'report': reports.write_json(out / "simulation.json", payload)}
        if report.trace:
            result['trace'] = reports.write_trace_csv(out / "trace.csv", report.trace)
        return result

    def cmd_search(self, opts, on_status):
        inst = self._instance(opts, on_status)
        pool = self._pool(inst, opts, on_status)
        evaluate = self._evaluator(pool, inst, opts, on_status)
        run_id = self.db.start_run('search', inst.name, opts)

        self._update_step("Avaliando a solução passo a passo (η = 0)...", on_status)
        sbs = step_by_step(evaluate)
        self._update_step("Executando a busca em linha...", on_status)
        best, state = line_search(evaluate, parse_pair(opts['zeta']), parse_pair(opts['ub']),
                                  float(opts['eps_init']), on_progress=lambda m: self._update_step(m, on_status))

        self.db.insert_eval_records(run_id, 'step_by_step', [sbs])
        self.db.insert_eval_records(run_id, 'line_search', [best])
        self.db.insert_eval_records(run_id, 'history', state.history)

        out = self._dir(opts)
        payload = {
            'instance': inst.name,
            'step_by_step': reports.record_payload(sbs),
            'line_search': reports.record_payload(best),
            'delta_pct': cost_increase(sbs, best),
            'iterations': state.iterations,
            'summary': solution_summary(inst, best),
            'sS': reports.sS_rows(best.policy),
            'selection': reports.selection_payload(best.selection),
        }
        if opts.get('simulate'):
            seed = self._require_seed(opts)
            report = simulate(best.selection, inst, best.policy, int(opts['periods']), seed, 'aggregate',
                              int(opts['replications']), threads=opts.get('threads'))
            payload['simulation'] = report.to_dict()
        return {
            'search': reports.write_json(out / "search.json", payload),
            'history': reports.write_records_csv(out / "history.csv", state.history),
            'sS': reports.write_sS_csv(out / "sS.csv", best.policy),
            'best_total': best.total,
            'step_by_step_total': sbs.total,
        }

    def cmd_grid(self, opts, on_status):
        inst = self._instance(opts, on_status)
        pool = self._pool(inst, opts, on_status)
        evaluate = self._evaluator(pool, inst, opts, on_status)
        g1, g2 = default_grids(inst)
        g1 = parse_list(opts.get('grid_eta1')) or g1
        g2 = parse_list(opts.get('grid_eta2')) or g2
        run_id = self.db.start_run('grid', inst.name, opts)

        best, records = grid_search(evaluate, g1, g2, opts.get('threads'),
                                    on_progress=lambda m: self._update_step(m, on_status))
        optimal = grid_optima(records, best)
        self.db.insert_eval_records(run_id, 'grid', records)

        out = self._dir(opts)
        payload = {
            'instance': inst.name,
            'grid_eta1': g1, 'grid_eta2': g2,
            'best': reports.record_payload(best),
            'optima': [{'eta1': r.eta1, 'eta2': r.eta2} for r, flag in zip(records, optimal) if flag],
        }
        return {
            'grid': reports.write_records_csv(out / "grid.csv", records, optimal),
            'summary': reports.write_json(out / "grid.json", payload),
            'best_total': best.total,
        }

    def cmd_sweep(self, opts, on_status):
        which = opts.get('which')
        if which not in SWEEPS:
            raise ConfigError(f"--which deve ser um de {SWEEPS}")
        try:
            lo, hi, step = float(opts['from']), float(opts['to']), float(opts['step_mult'])
        except (TypeError, KeyError, ValueError) as e:
            raise ConfigError("Informe --from, --to e --step-mult para a varredura.") from e
        if step <= 0 or hi < lo:
            raise ConfigError("Intervalo de varredura inválido.")
        multipliers = [round(float(m), 10) for m in np.arange(lo, hi + step / 2, step)]

        inst = self._instance(opts, on_status)
        base_sel = self._selection(inst, opts, on_status) if which != 'm_d' else None

        def point(m):
            factors = {'m_s': (m, 1.0, 1.0), 'm_p': (1.0, m, 1.0), 'm_d': (1.0, 1.0, m)}[which]
            scaled = scale(inst, *factors)
            # oferta não entra no modelo tático: só m_d muda os clusters
            sel = base_sel if base_sel is not None else self._selection(scaled, opts, on_status)
            policy, _, _ = self._solve_mdp(sel, scaled, opts, on_status)
            self._update_step(f"{which} = {m:g}: compras {policy.cycle_cost:.2f}", on_status)
            return sel.tactical_cost, policy.cycle_cost

        results = {m: point(m) for m in multipliers}
        base = results[1.0] if 1.0 in results else point(1.0)
        rows = []
        for m in multipliers:
            tactical, purchasing = results[m]
            rows.append({
                'multiplier': m, 'tactical': tactical, 'purchasing': purchasing,
                'total': tactical + purchasing,
                'tactical_ratio': tactical / base[0] if base[0] else float('nan'),
                'purchasing_ratio': purchasing / base[1] if base[1] else float('nan'),
            })
        path = reports.write_csv(self._dir(opts) / f"sweep_{which}.csv", rows,
                                 columns=['multiplier', 'tactical', 'purchasing', 'total',
                                          'tactical_ratio', 'purchasing_ratio'])
        return {'sweep': path, 'points': len(rows)}

    def cmd_report(self, opts, on_status):
        """Tabela de desempenho a partir dos registros gravados; não executa nenhum resolvedor."""
        rows = []
        search_totals = {}
        for run_id, _, instance_name, config_json in self.db.fetch_runs('search'):
            sbs = self.db.fetch_eval_records(run_id, 'step_by_step')
            ls = self.db.fetch_eval_records(run_id, 'line_search')
            if not sbs or not ls:
                continue
            history = self.db.fetch_eval_records(run_id, 'history')
            sbs_total, ls_total = sbs[0][5], ls[0][5]
            rows.append({
                'scenario': self._scenario(instance_name, config_json),
                'instance': instance_name,
                'delta_pct': 100.0 * (sbs_total - ls_total) / ls_total,
                'sbs_tactical': sbs[0][3], 'sbs_mdp': sbs[0][4],
                'ls_tactical': ls[0][3], 'ls_mdp': ls[0][4],
                'iterations': max(len(history) - 1, 0),
            })
            search_totals[instance_name] = ls_total

        gaps = []
        for run_id, _, instance_name, _ in self.db.fetch_runs('grid'):
            grid = self.db.fetch_eval_records(run_id, 'grid')
            if grid and instance_name in search_totals:
                grid_best = min(r[5] for r in grid)
                gaps.append({'instance': instance_name,
                             'gap_pct': 100.0 * (search_totals[instance_name] - grid_best) / grid_best})

        table = reports.performance_table(rows)
        self._update_step(f"Relatório com {len(rows)} execuções de busca.", on_status)
        out = self._dir(opts)
        return {
            'table': reports.write_performance_table(out / "report.csv", table),
            'details': reports.write_json(out / "report.json", {'runs': rows, 'grid_gaps': gaps}),
        }

    @staticmethod
    def _scenario(instance_name, config_json):
        config = json.loads(config_json or "{}")
        if config.get('scenario'):
            return config['scenario']
        return re.sub(r'_s\d+$', '', instance_name or "")
