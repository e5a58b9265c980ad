"""
Exportador de resultados: JSON, CSV, autofunciones e informe HTML

Todas las escrituras son atómicas (fichero temporal + os.replace).
"""
import json
import logging
import math
import os
import tempfile
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import markdown
import numpy as np

from src.utils import format_float

logger = logging.getLogger(__name__)

# Temas visuales del informe HTML
THEMES = {
    'light': {
        'name': 'Claro',
        'bg_color': '#ffffff',
        'text_color': '#333333',
        'heading_color': '#1a1a1a',
        'accent_color': '#0066cc',
        'border_color': '#e0e0e0',
        'code_bg': '#f5f5f5'
    },
    'dark': {
        'name': 'Oscuro',
        'bg_color': '#1a1a1a',
        'text_color': '#e0e0e0',
        'heading_color': '#ffffff',
        'accent_color': '#4a9eff',
        'border_color': '#333333',
        'code_bg': '#2a2a2a'
    },
    'corporate': {
        'name': 'Corporativo',
        'bg_color': '#f8f9fa',
        'text_color': '#2c3e50',
        'heading_color': '#1a252f',
        'accent_color': '#3498db',
        'border_color': '#bdc3c7',
        'code_bg': '#ecf0f1'
    }
}

EIGENFUNCTION_HEADER = "x,y,value"

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Escribe un fichero de texto de forma atómica.

    Args:
        path: Destino (se crean los directorios que falten)
        text: Contenido

    Returns:
        Path del fichero escrito
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise

    logger.debug(f"Escrito {path} ({len(text):,} caracteres)")
    return path


def to_jsonable(value):
    """Convierte arrays, escalares numpy, enums y paths a tipos JSON; NaN/inf -> None"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps(payload: Dict) -> str:
    """JSON determinista (claves en orden de inserción, floats con repr de ida y vuelta)"""
    return json.dumps(to_jsonable(payload), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(payload: Dict, path: PathLike) -> Path:
    """Guarda un informe JSON"""
    path = atomic_write_text(path, dumps(payload))
    logger.info(f"💾 JSON guardado en: {path}")
    return path


def _cell(value) -> str:
    value = to_jsonable(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, ensure_ascii=False).replace(',', ';')
    return str(value).replace(',', ';')


def rows_to_csv(rows: Sequence[Dict], columns: Optional[List[str]] = None) -> str:
    """Tabla CSV con una fila por diccionario"""
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(key for key in row if key not in columns)

    lines = [",".join(columns)]
    lines.extend(",".join(_cell(row.get(col)) for col in columns) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(rows: Sequence[Dict], path: PathLike, columns: Optional[List[str]] = None) -> Path:
    """Guarda una tabla CSV"""
    path = atomic_write_text(path, rows_to_csv(rows, columns))
    logger.info(f"💾 CSV guardado en: {path} ({len(rows)} filas)")
    return path


def sidecar_path(path: PathLike) -> Path:
    """<path>.json"""
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_eigenfunction_csv(
    coordinates: np.ndarray,
    values: np.ndarray,
    path: PathLike,
    config: Optional[Dict] = None
) -> Path:
    """
    Exporta una autofunción: cabecera 'x,y,value' y un vértice por línea.

    La configuración de la ejecución va en un fichero hermano <path>.json.

    Args:
        coordinates: (N, 2) coordenadas de los vértices
        values: (N,) valor en cada vértice (cero en los restringidos)
        path: Destino del CSV
        config: Configuración para el fichero hermano
    """
    coordinates = np.asarray(coordinates, dtype=float)
    values = np.asarray(values, dtype=float)

    lines = [EIGENFUNCTION_HEADER]
    lines.extend(
        f"{format_float(x)},{format_float(y)},{format_float(v)}"
        for (x, y), v in zip(coordinates, values)
    )

    path = atomic_write_text(path, "\n".join(lines) + "\n")
    write_json(config or {}, sidecar_path(path))

    logger.info(f"💾 Autofunción exportada: {path} ({len(values)} vértices)")
    return path


def get_html_template(theme: str = 'light') -> str:
    """
    Plantilla HTML con los colores del tema.

    Args:
        theme: 'light', 'dark' o 'corporate'

    Returns:
        Plantilla con los huecos __TITLE__, __CONTENT__ y __GENERATION_DATE__
    """
    if theme not in THEMES:
        logger.warning(f"Tema '{theme}' no válido, usando 'light'")
        theme = 'light'

    colors = THEMES[theme]

    template = """<!DOCTYPE html>
<html lang="es">
<head>
    <meta charset="UTF-8">
    <meta name="generator" content="Banda">
    <title>__TITLE__</title>
    <style>
        body {
            font-family: -apple-system, 'Segoe UI', Roboto, Arial, sans-serif;
            line-height: 1.5;
            color: __TEXT_COLOR__;
            background-color: __BG_COLOR__;
            padding: 20px;
        }
        .container { max-width: 960px; margin: 0 auto; }
        h1 {
            color: __HEADING_COLOR__;
            border-bottom: 3px solid __ACCENT_COLOR__;
            padding-bottom: 0.3em;
        }
        h2 {
            color: __HEADING_COLOR__;
            border-left: 4px solid __ACCENT_COLOR__;
            padding-left: 12px;
        }
        table { border-collapse: collapse; margin-bottom: 1.5em; }
        th, td {
            padding: 6px 12px;
            text-align: right;
            border-bottom: 1px solid __BORDER_COLOR__;
            font-family: 'Courier New', monospace;
        }
        th { background: __CODE_BG__; color: __HEADING_COLOR__; }
        code, pre { background: __CODE_BG__; }
        .footer {
            margin-top: 2em;
            border-top: 1px solid __BORDER_COLOR__;
            font-size: 0.85em;
            opacity: 0.7;
        }
    </style>
</head>
<body>
    <div class="container">
        __CONTENT__
        <div class="footer">
            <p>Generado el __GENERATION_DATE__ con Banda</p>
        </div>
    </div>
</body>
</html>
"""

    for key in ('bg_color', 'text_color', 'heading_color', 'accent_color', 'border_color', 'code_bg'):
        template = template.replace(f"__{key.upper()}__", colors[key])

    return template


def _markdown_value(value) -> str:
    value = to_jsonable(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, list) and all(isinstance(v, (int, float)) or v is None for v in value):
        return ", ".join("-" if v is None else (format_float(v) if isinstance(v, float) else str(v)) for v in value)
    if isinstance(value, (list, dict)):
        return f"`{json.dumps(value, ensure_ascii=False)}`"
    return "-" if value is None else str(value)


def report_markdown(title: str, payload: Dict, table: Optional[Iterable[Dict]] = None) -> str:
    """
    Resumen Markdown de un informe: parámetros escalares y, opcionalmente, una tabla.

    Args:
        title: Título del informe
        payload: Informe (se listan sus campos de primer nivel)
        table: Filas a tabular
    """
    lines = [f"# {title}", "", "| Campo | Valor |", "|---|---|"]

    for key, value in payload.items():
        if key in ('config', 'rows'):
            continue
        lines.append(f"| {key} | {_markdown_value(value)} |")

    rows = list(table or [])
    if rows:
        columns = list(rows[0].keys())
        lines += ["", "## Tabla", "", "| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
        lines.extend("| " + " | ".join(_markdown_value(row.get(c)) for c in columns) + " |" for row in rows)

    if 'config' in payload:
        lines += ["", "## Configuración", "", "```", json.dumps(to_jsonable(payload['config']), indent=2), "```"]

    return "\n".join(lines) + "\n"


def markdown_to_html(markdown_text: str, title: str = "Informe espectral", theme: str = 'light') -> str:
    """
    Convierte Markdown a HTML con el tema elegido.

    Args:
        markdown_text: Texto en formato Markdown
        title: Título de la página
        theme: Tema visual ('light', 'dark', 'corporate')

    Returns:
        HTML completo
    """
    logger.info(f"📄 Convirtiendo informe a HTML (tema: {theme})...")

    md = markdown.Markdown(extensions=['extra', 'sane_lists'])
    content_html = md.convert(markdown_text)

    html = get_html_template(theme)
    html = html.replace('__CONTENT__', content_html)
    html = html.replace('__TITLE__', title)
    html = html.replace('__GENERATION_DATE__', datetime.now().strftime('%d/%m/%Y %H:%M'))

    return html


def save_html_report(
    payload: Dict,
    path: PathLike,
    title: str,
    theme: str = 'light',
    table: Optional[Iterable[Dict]] = None
) -> Path:
    """
    Guarda el informe HTML junto a la salida principal (misma ruta, extensión .html).

    Returns:
        Path del HTML
    """
    html_path = Path(path).with_suffix('.html')
    html = markdown_to_html(report_markdown(title, payload, table), title=title, theme=theme)
    atomic_write_text(html_path, html)
    logger.info(f"💾 HTML guardado en: {html_path}")
    return html_path
