import json
import sqlite3
from datetime import datetime

EVAL_KINDS = ('step_by_step', 'line_search', 'history', 'grid')


class DatabaseHandler:

    def __init__(self, db_name="scirp.db"):
        self.conn = sqlite3.connect(db_name, check_same_thread=False)
        self.create_tables()

    def create_tables(self):
        """Cria as tabelas necessárias garantindo que a tabela de logs exista primeiro."""
        cursor = self.conn.cursor()

        # 1. CRIAR TABELA DE LOGS PRIMEIRO
        # Qualquer erro na criação das demais tabelas já pode ser registrado no banco.
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS system_logs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                message TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)
        self.conn.commit()

        # 2. Uma linha por execução de comando
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT, instance_name TEXT, config_json TEXT,
                created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)

        # 3. Avaliações (η1, η2) de cada execução
        cursor.execute("""
            CREATE TABLE IF NOT EXISTS eval_records (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER, kind TEXT, eta1 REAL, eta2 REAL,
                tactical_cost REAL, mdp_cycle_cost REAL, total REAL,
                cluster_ids TEXT, mip_seconds REAL, mdp_seconds REAL
            )
        """)
        self.conn.commit()

    def log_event(self, message):
        """Grava logs com proteção para não quebrar caso a tabela ainda não exista."""
        try:
            cursor = self.conn.cursor()
            cursor.execute("INSERT INTO system_logs (message, created_at) VALUES (?, ?)",
                           (message, datetime.now().isoformat(sep=' ')))
            self.conn.commit()
        except sqlite3.OperationalError:
            # Fallback silencioso caso a tabela realmente não exista no momento da chamada
            print(f"Log (Console apenas): {message}")
        except Exception as e:
            print(f"Erro inesperado ao salvar log: {e}")

    def start_run(self, command, instance_name, config):
        cursor = self.conn.cursor()
        cursor.execute("INSERT INTO runs (command, instance_name, config_json, created_at) VALUES (?, ?, ?, ?)",
                       (command, instance_name, json.dumps(config, sort_keys=True, default=str),
                        datetime.now().isoformat(sep=' ')))
        self.conn.commit()
        return cursor.lastrowid

    def insert_eval_records(self, run_id, kind, records):
        """Insere registros de avaliação; `kind` identifica a origem (passo a passo, busca, grade)."""
        if kind not in EVAL_KINDS:
            raise ValueError(f"Tipo de registro desconhecido: {kind}")
        cursor = self.conn.cursor()
        cursor.executemany("""
            INSERT INTO eval_records
            (run_id, kind, eta1, eta2, tactical_cost, mdp_cycle_cost, total, cluster_ids, mip_seconds, mdp_seconds)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """, [(run_id, kind, r.eta1, r.eta2, r.tactical_cost, r.mdp_cycle_cost, r.total,
               json.dumps(list(r.cluster_ids)), r.mip_seconds, r.mdp_seconds) for r in records])
        self.conn.commit()

    def fetch_runs(self, command=None):
        cursor = self.conn.cursor()
        if command:
            cursor.execute("SELECT id, command, instance_name, config_json FROM runs WHERE command = ? ORDER BY id",
                           (command,))
        else:
            cursor.execute("SELECT id, command, instance_name, config_json FROM runs ORDER BY id")
        return cursor.fetchall()

    def fetch_eval_records(self, run_id, kind=None):
        cursor = self.conn.cursor()
        query = """
            SELECT kind, eta1, eta2, tactical_cost, mdp_cycle_cost, total, cluster_ids, mip_seconds, mdp_seconds
            FROM eval_records WHERE run_id = ?
        """
        args = [run_id]
        if kind:
            query += " AND kind = ?"
            args.append(kind)
        cursor.execute(query + " ORDER BY id", args)
        return cursor.fetchall()

    def close(self):
        self.conn.close()
