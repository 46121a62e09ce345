import argparse
import json
import sys
from pathlib import Path

from models.errors import ConfigError, ConvergenceError
from viewmodels.main_vm import MainViewModel

COMMANDS = ('gen', 'clusters', 'solve', 'mdp', 'simulate', 'search', 'grid', 'sweep', 'report')

DEFAULT_OPTIONS = {
    'instance': None,
    'out': 'out',
    'seed': None,
    'step': 5,
    'tail_mass': 1e-6,
    'epsilon': 0.1,
    'max_cycles': 1_000_000,
    'zeta': '1.0,0.5',
    'ub': '8,4',
    'eps_init': 0.0001,
    'periods': 1_000_000,
    'replications': 1,
    'mode': 'aggregate',
    'clamp': True,
    'trace': 0,
    'simulate': False,
    'eta1': 0.0,
    'eta2': 0.0,
    'grid_eta1': None,
    'grid_eta2': None,
    'which': None,
    'from': None,
    'to': None,
    'step_mult': None,
    'n': 15,
    'T': 7,
    'uncertainty': 'L',
    'params': {},
    'solver': 'bnb',
    'threads': None,
    'clusters': None,
    'scenario': None,
}


def build_parser() -> argparse.ArgumentParser:
    # sem default: só as opções digitadas entram no dicionário, o resto vem do config/padrões
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument('--config', help="Arquivo JSON com opções (nomes dos flags com '_')")
    common.add_argument('--instance', help="Arquivo JSON da instância")
    common.add_argument('--out', help="Diretório de saída (também guarda scirp.db)")
    common.add_argument('--seed', type=int)
    common.add_argument('--tail-mass', dest='tail_mass', type=float)
    common.add_argument('--epsilon', type=float)
    common.add_argument('--max-cycles', dest='max_cycles', type=int)
    common.add_argument('--zeta', help="Incrementos 'ζ1,ζ2' (ou um valor para ambos)")
    common.add_argument('--ub', help="Limites 'UB1,UB2' (ou um valor para ambos)")
    common.add_argument('--eps-init', dest='eps_init', type=float)
    common.add_argument('--periods', type=int)
    common.add_argument('--replications', type=int)
    common.add_argument('--mode', choices=['aggregate', 'full'])
    common.add_argument('--no-clamp', dest='clamp', action='store_false')
    common.add_argument('--trace', type=int, help="Períodos do traço de simulação gravados em CSV")
    common.add_argument('--simulate', action='store_true', help="search: simula a melhor política")
    common.add_argument('--eta1', type=float)
    common.add_argument('--eta2', type=float)
    common.add_argument('--grid-eta1', dest='grid_eta1', help="Lista separada por vírgulas")
    common.add_argument('--grid-eta2', dest='grid_eta2', help="Lista separada por vírgulas")
    common.add_argument('--n', type=int, help="gen: número de clientes")
    common.add_argument('--T', type=int, help="gen: períodos do ciclo")
    common.add_argument('--uncertainty', choices=['L', 'H'])
    common.add_argument('--params', help="gen: JSON (texto ou arquivo) com parâmetros do sistema base")
    common.add_argument('--solver', help="Resolvedor do particionamento (bnb, brute)")
    common.add_argument('--threads', type=int)
    common.add_argument('--clusters', help="Clusters explícitos, ex.: '1,2@1,4,6 3@1,3,5,7'")
    common.add_argument('--scenario', help="Rótulo do cenário no relatório")

    parser = argparse.ArgumentParser(prog='scirp', description="SCIRP: roteamento cíclico e compras sob incerteza")
    sub = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
        if name == 'sweep':
            # na varredura, --step é o passo do multiplicador
            cmd.add_argument('--which', choices=['m_s', 'm_p', 'm_d'])
            cmd.add_argument('--from', dest='from', type=float)
            cmd.add_argument('--to', type=float)
            cmd.add_argument('--step', '--step-mult', dest='step_mult', type=float)
            cmd.add_argument('--mdp-step', dest='step', type=int)
        else:
            cmd.add_argument('--step', type=int, help="Passo da discretização do estoque (kg)")
    return parser


def resolve_options(args: dict) -> dict:
    """Padrões < arquivo de configuração < flags da linha de comando."""
    options = dict(DEFAULT_OPTIONS)
    config_path = args.pop('config', None)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"Arquivo de configuração não encontrado: {path}")
        try:
            config = json.loads(path.read_text(encoding='utf-8'))
        except json.JSONDecodeError as e:
            raise ConfigError(f"JSON inválido em {path}: {e}") from e
        config = {k.replace('-', '_'): v for k, v in config.items()}
        unknown = sorted(set(config) - set(DEFAULT_OPTIONS))
        if unknown:
            raise ConfigError(f"Opções desconhecidas no config: {', '.join(unknown)}")
        options.update(config)
    options.update(args)
    if options.get('instance') and not Path(options['instance']).exists():
        raise ConfigError(f"Instância não encontrada: {options['instance']}")
    return options


class MainView:

    def __init__(self, argv=None):
        self.argv = argv
        self.result = None
        self.error = None

    def update_status_ui(self, message):
        """Status vai para stderr; stdout fica com o resultado final."""
        print(message, file=sys.stderr, flush=True)

    def on_error(self, error):
        self.error = error

    def on_done(self, result):
        self.result = result

    def run(self) -> int:
        args = vars(build_parser().parse_args(self.argv))
        command = args.pop('command')
        try:
            options = resolve_options(args)
        except ConfigError as e:
            self.error = e
            return self._report_error()

        vm = MainViewModel(options['out'])
        try:
            thread = vm.run_command(command, options, self.update_status_ui, self.on_error, self.on_done)
            thread.join()
        finally:
            vm.close()

        if self.error is not None:
            return self._report_error()
        print(json.dumps({'command': command, 'result': self.result}, sort_keys=True, indent=2, default=str))
        return 0

    def _report_error(self) -> int:
        payload = {'error': type(self.error).__name__, 'message': str(self.error)}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 2 if isinstance(self.error, (ValueError, ConvergenceError)) else 1
