"""
Cache SQLite de tabelas exatas de cauda
"""

import json
import logging
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

import mpmath

from exactdist import TailTable
from utils import decimal_digits

logger = logging.getLogger(__name__)

DEFAULT_DB = "strahler_tables.db"

SCHEMA = '''
    CREATE TABLE IF NOT EXISTS tail_tables (
        dist_id TEXT,
        statistic TEXT,
        x_max INTEGER,
        precision_bits INTEGER,
        transform_applied INTEGER,
        data TEXT,
        metadata TEXT,
        last_updated TIMESTAMP,
        PRIMARY KEY (dist_id, statistic, x_max, precision_bits, transform_applied)
    )
'''


class TableCache:
    """Gerenciador do cache de tabelas"""

    def __init__(self, db_path: Union[str, Path] = DEFAULT_DB):
        self.db_path = str(db_path)
        self.init_database()

    def init_database(self) -> None:
        """Cria a tabela de cache se necessário"""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute(SCHEMA)
        conn.commit()
        conn.close()

    def store(self, table: TailTable) -> None:
        """Armazena a tabela com dígitos suficientes para reconstruí-la"""
        digits = decimal_digits(table.precision_bits) + 5
        data = {
            'q': [mpmath.nstr(v, digits) for v in table.q],
            's': [mpmath.nstr(v, digits) for v in table.s],
        }

        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute('''
            INSERT OR REPLACE INTO tail_tables
            (dist_id, statistic, x_max, precision_bits, transform_applied, data, metadata, last_updated)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?)
        ''', (table.dist_id, table.statistic, table.x_max, table.precision_bits,
              int(table.transform_applied), json.dumps(data), json.dumps(table.metadata()),
              datetime.now().isoformat()))
        conn.commit()
        conn.close()
        logger.debug(f"Tabela {table.statistic} de {table.dist_id} armazenada no cache")

    def load(self, dist_id: str, statistic: str, x_max: int, precision_bits: int,
             transform_applied: bool) -> Optional[TailTable]:
        """Recupera a tabela do cache, ou None"""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute('''
            SELECT data, metadata FROM tail_tables
            WHERE dist_id = ? AND statistic = ? AND x_max = ? AND precision_bits = ? AND transform_applied = ?
        ''', (dist_id, statistic, x_max, precision_bits, int(transform_applied)))
        result = cursor.fetchone()
        conn.close()

        if not result:
            return None

        try:
            data = json.loads(result[0])
            metadata = json.loads(result[1])
            ctx = mpmath.MPContext()
            ctx.prec = precision_bits
            q = tuple(ctx.mpf(v) for v in data['q'])
            s = tuple(ctx.mpf(v) for v in data['s'])
            if len(q) != x_max + 1 or len(s) != x_max + 2:
                raise ValueError("comprimento inconsistente")
        except (ValueError, KeyError, TypeError) as e:
            logger.warning(f"Entrada corrompida no cache ({dist_id}, {statistic}): {e}")
            return None

        logger.info(f"Tabela {statistic} de {dist_id} recuperada do cache")
        return TailTable(
            statistic=statistic,
            dist_id=dist_id,
            x_max=x_max,
            q=q,
            s=s,
            precision_bits=precision_bits,
            transform_applied=transform_applied,
            truncation_mass=float(metadata.get('truncation_mass', 0.0)),
        )
