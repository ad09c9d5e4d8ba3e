"""
Report rendering: `text` (aligned tables for people), `csv` (one header line plus the frozen columns of
each report type) and `structured` (YAML of `model_dump(mode='json')`, which `parse_structured_report`
reads back into the same report).
"""
import io
import csv
from typing import Annotated, Any, Callable, Union
import yaml
from pydantic import Field, TypeAdapter

from .config import Loader, Dumper, OutputFormat
from .structs.reports import BaseReport, DeviationReport, BoundsReport, MixingReport, LemmaSuiteReport, VerifyReport

__all__ = (
    'AnyReport',
    'report2structured',
    'report2csv',
    'report2text',
    'render_report',
    'parse_structured_report',
)

AnyReport = Annotated[
    Union[DeviationReport, BoundsReport, MixingReport, LemmaSuiteReport, VerifyReport],
    Field(discriminator='kind')
]
_report_adapter: TypeAdapter[AnyReport] = TypeAdapter(AnyReport)


def report2structured(report: BaseReport) -> str:
    return yaml.dump(
        report.model_dump(mode='json', by_alias=True), Dumper=Dumper, sort_keys=False, allow_unicode=True
    )


def parse_structured_report(text: str) -> BaseReport:
    return _report_adapter.validate_python(yaml.load(text, Loader=Loader))


def _csv_cell(value: Any) -> Any:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return value


def report2csv(report: BaseReport) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=report.CSV_COLUMNS, lineterminator='\n')
    writer.writeheader()
    for row in report.csv_rows():
        writer.writerow({key: _csv_cell(value) for key, value in row.items()})
    return buffer.getvalue()


def _text_cell(value: Any) -> str:
    if isinstance(value, bool):
        return 'yes' if value else 'NO'
    if isinstance(value, float):
        return f'{value:.6g}'
    return str(value)


def _table(columns: tuple[str, ...], rows: list[dict[str, Any]]) -> list[str]:
    cells = [[_text_cell(row[column]) for column in columns] for row in rows]
    widths = [max(len(column), *(len(line[index]) for line in cells)) for index, column in enumerate(columns)]
    lines = ['  '.join(column.rjust(width) for column, width in zip(columns, widths))]
    lines.append('  '.join('-' * width for width in widths))
    lines.extend('  '.join(cell.rjust(width) for cell, width in zip(line, widths)) for line in cells)
    return lines


def _constants_lines(report: DeviationReport | BoundsReport | MixingReport) -> list[tuple[str, Any]]:
    constants = report.constants
    lines = [('G', constants.G), ('theta', constants.theta)]
    if constants.horizon_too_short:
        lines.append(('warning', f'horizon {constants.horizon} is too short for a trustworthy fit'))
    return lines


def _deviation_summary(report: DeviationReport) -> list[tuple[str, Any]]:
    lines = [
        ('spec', report.spec_id), ('n', report.n), ('trials', report.trials), ('seed', report.seed),
        ('statistic', report.statistic_name), ('delta_mc', report.delta_mc),
        ('start', 'stationary' if report.stationary else f'nonstationary (+{report.correction:.6g} on bounds)'),
        *_constants_lines(report),
    ]
    if report.expectation is not None:
        expectation = report.expectation
        lines.append((
            'expectation',
            f'{expectation.estimate:.6g} +- {expectation.halfwidth:.6g} (bound {expectation.bound:.6g})'
        ))
    return lines


def _bounds_summary(report: BoundsReport) -> list[tuple[str, Any]]:
    return [
        ('spec', report.spec_id), ('n', report.n), ('start', 'stationary' if report.stationary else 'nonstationary'),
        *_constants_lines(report), ('||Delta||_inf', report.delta_inf), ('||Delta||_2', report.delta_2),
    ]


def _mixing_summary(report: MixingReport) -> list[tuple[str, Any]]:
    return [
        ('spec', report.spec_id), ('kappa', report.kappa),
        ('pi', ' '.join(f'{p:.6g}' for p in report.stationary)), *_constants_lines(report),
        ('n', report.n), ('||Delta||_inf', report.delta_inf), ('||Delta||_2', report.delta_2),
        ('2G/(1-theta)', report.delta_inf_cap),
    ]


def _suite_summary(report: LemmaSuiteReport) -> list[tuple[str, Any]]:
    return [
        ('seed', report.seed), ('instances', report.instances), ('limit', report.limit),
        ('eta_bar = kappa observed', report.equality_observations),
    ]


def _verify_summary(report: VerifyReport) -> list[tuple[str, Any]]:
    audit = report.audit
    return [
        *_suite_summary(report.suite),
        ('audit', f'n = {audit.n}, {audit.pairs} pairs, {audit.perturbations} single-site changes'),
    ]


_SUMMARIES: dict[str, Callable[[Any], list[tuple[str, Any]]]] = {
    'deviation': _deviation_summary,
    'bounds': _bounds_summary,
    'mixing': _mixing_summary,
    'lemma_suite': _suite_summary,
    'verify': _verify_summary,
}


def report2text(report: BaseReport) -> str:
    summary = _SUMMARIES.get(report.kind, lambda _: [])(report)
    summary.append(('result', 'PASS' if report.passed else 'FAIL'))
    width = max(len(key) for key, _ in summary)

    lines = [f'{key.ljust(width)}  {_text_cell(value)}' for key, value in summary]
    rows = report.csv_rows()
    if rows:
        lines.append('')
        lines.extend(_table(report.CSV_COLUMNS, rows))
    return '\n'.join(lines) + '\n'


_RENDERERS: dict[str, Callable[[BaseReport], str]] = {
    'text': report2text,
    'csv': report2csv,
    'structured': report2structured,
}


def render_report(report: BaseReport, output_format: OutputFormat) -> str:
    return _RENDERERS[output_format](report)
