#!/usr/bin/env python3
"""
Script de execução do Analisador de Horton-Strahler
"""

import os
import sys

# Adicionar diretório atual ao path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cli import main

if __name__ == "__main__":
    sys.exit(main())
