"""
Instalação do Analisador de Horton-Strahler: dependências, cache de tabelas
e uma verificação rápida do cálculo exato.
"""

import importlib
import subprocess
import sys
from pathlib import Path

MIN_PYTHON = (3, 8)
REQUIRED_MODULES = ("numpy", "pandas", "mpmath")


class SystemInstaller:
    """Instalador do sistema"""

    def __init__(self):
        self.project_dir = Path(__file__).parent
        self.requirements_file = self.project_dir / "requirements.txt"
        self.db_file = self.project_dir / "strahler_tables.db"

    def check_python_version(self):
        """Verifica versão do Python"""
        found = sys.version_info[:3]
        label = ".".join(str(v) for v in found)
        if found[:2] < MIN_PYTHON:
            print(f"❌ Python {MIN_PYTHON[0]}.{MIN_PYTHON[1]}+ é necessário (encontrado {label})")
            return False
        print(f"✅ Python {label}")
        return True

    def install_requirements(self):
        """pip install -r requirements.txt com o interpretador atual"""
        if not self.requirements_file.exists():
            print(f"❌ {self.requirements_file.name} não encontrado em {self.project_dir}")
            return False

        command = [sys.executable, "-m", "pip", "install", "-r", str(self.requirements_file)]
        print("📦", " ".join(command[2:]))
        result = subprocess.run(command)
        if result.returncode != 0:
            print(f"❌ pip terminou com código {result.returncode}")
            return False
        return True

    def check_modules(self):
        """Confere que numpy, pandas e mpmath importam"""
        missing = []
        for name in REQUIRED_MODULES:
            try:
                module = importlib.import_module(name)
                print(f"  {name} {getattr(module, '__version__', '?')}")
            except ImportError:
                missing.append(name)
        if missing:
            print(f"❌ Módulos ausentes: {', '.join(missing)}")
        return not missing

    def setup_database(self):
        """Cria o cache SQLite de tabelas exatas"""
        try:
            sys.path.insert(0, str(self.project_dir))
            from cache import TableCache

            TableCache(self.db_file)
        except Exception as e:
            print(f"❌ Erro ao criar o cache: {e}")
            return False
        print(f"✅ Cache criado em {self.db_file}")
        return True

    def self_check(self):
        """P{HS = 1} = 1/4 para a lei catalan"""
        try:
            sys.path.insert(0, str(self.project_dir))
            import offspring
            from exactdist import hs_tail_table

            q1 = hs_tail_table(offspring.builtin("catalan"), 2).q[1]
        except Exception as e:
            print(f"❌ Verificação falhou: {e}")
            return False
        if abs(q1 - 0.25) > 1e-60:
            print(f"❌ P{{HS = 1}} = {q1}, esperado 0.25")
            return False
        print("✅ Tabela exata conferida")
        return True

    def run_installation(self):
        """Executa os passos em ordem; um passo com falha não interrompe os demais"""
        steps = [
            ("Versão do Python", self.check_python_version),
            ("Dependências", self.install_requirements),
            ("Módulos", self.check_modules),
            ("Cache de tabelas", self.setup_database),
            ("Cálculo exato", self.self_check),
        ]

        print("🌳 Instalando o Analisador de Horton-Strahler")
        failed = []
        for label, step in steps:
            print(f"\n🔄 {label}")
            if not step():
                failed.append(label)

        print("\n" + "=" * 50)
        if failed:
            print(f"⚠️ Instalação com problemas em: {', '.join(failed)}")
            return False
        print("🎉 Instalação concluída. Experimente:")
        print("  python run.py constants --dist catalan")
        return True


def main():
    """Função principal de instalação"""
    if sys.argv[1:2] == ["install"]:
        ok = SystemInstaller().run_installation()
        sys.exit(0 if ok else 1)
    print("Uso:")
    print("  python setup.py install   instala dependências e cria o cache")
    print("  python run.py <comando>   exact, sample, enumerate, constants, experiment")


if __name__ == "__main__":
    main()
