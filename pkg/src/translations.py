"""
This script provides the messages printed by the command line in English and German.

Key Features:
- Stores every user-facing CLI message in English and German.
- Supports dynamic placeholder replacement in translated strings.
- Selects the language once per invocation (`--lang en|de`).

Usage:
- Use `translate(key, **kwargs)` to retrieve the translated text for a given key.
- Call `set_language("de")` to switch to German.
"""

# Dictionary containing translations for different languages
TRANSLATIONS = {
    "en": {
        "description": "Self-similar solutions of the curve shortening flow: construction, verification and flow simulation.",
        "wrote_file": "Wrote {path}",
        "input_error": "Input error: {message}",
        "numerical_error": "Numerical failure in {command}: {message}",
        "none": "none",
        "yes": "yes",
        "no": "no",

        # --- Planar curves ---
        "planar_summary": "{kind} alpha0 = {alpha0:.10g}, alpha'(0) = {dalpha0:.10g}: {samples} samples on [{t0:.6g}, {t1:.6g}]",
        "period_line": "alpha period: {period}",
        "residual_line": "equation residual: max {max:.3e}, rms {rms:.3e}",
        "unit_speed_line": "unit-speed defect: {defect:.3e}",
        "radius_line": "distance to origin: min {min:.10g}, max {max:.10g}",
        "alpha_line": "alpha on [{t0:.6g}, {t1:.6g}]: min {min:.10g}, max {max:.10g}",

        # --- Space curves ---
        "soliton_line": "{kind} in R^{dimension} over t in [{t0:.6g}, {t1:.6g}]",
        "plane_line": "best-fit plane residual: max {max:.3e}, rms {rms:.3e}; distance to span(p0, v0): {span:.3e}",
        "drift_line": "(r, s) drift of v: {drift:.3e}",
        "spherical_line": "spherical residuals: radial {radial:.3e}, theta {theta:.3e}, phi {phi:.3e}, speed {speed:.3e} ({skipped} samples skipped)",
        "spherical_unavailable": "spherical residuals unavailable: {message}",
        "v0_normalised": "v0 normalised to unit length (|v0| was {norm:.12g})",

        # --- Closure scan ---
        "scan_summary": "{count} grid points, {closed} closed, {failed} failed",
        "scan_monotone": "rotation ratio monotone on the scanned range: {monotone}",
        "scan_range": "rotation ratio range: {lo:.10g} .. {hi:.10g}",

        # --- Flow ---
        "flow_summary": "flow {status} at t = {t:.6g} after {steps} steps; length {length0:.9g} -> {length1:.9g}",
        "homothety_line": "t = {t:.4g}: rescaled Hausdorff distance / diameter = {distance:.3e}",
        "rescaled_area_line": "rescaled area: {first:.9g} -> {last:.9g} (relative change {change:.3e})",
    },
    "de": {
        "description": "Selbstähnliche Lösungen des Curve-Shortening-Flows: Konstruktion, Prüfung und Flusssimulation.",
        "wrote_file": "Datei geschrieben: {path}",
        "input_error": "Eingabefehler: {message}",
        "numerical_error": "Numerischer Fehler in {command}: {message}",
        "none": "keine",
        "yes": "ja",
        "no": "nein",

        # --- Ebene Kurven ---
        "planar_summary": "{kind} alpha0 = {alpha0:.10g}, alpha'(0) = {dalpha0:.10g}: {samples} Stützstellen auf [{t0:.6g}, {t1:.6g}]",
        "period_line": "Periode von alpha: {period}",
        "residual_line": "Residuum der Gleichung: max {max:.3e}, rms {rms:.3e}",
        "unit_speed_line": "Abweichung von Einheitsgeschwindigkeit: {defect:.3e}",
        "radius_line": "Abstand zum Ursprung: min {min:.10g}, max {max:.10g}",
        "alpha_line": "alpha auf [{t0:.6g}, {t1:.6g}]: min {min:.10g}, max {max:.10g}",

        # --- Raumkurven ---
        "soliton_line": "{kind} in R^{dimension} für t in [{t0:.6g}, {t1:.6g}]",
        "plane_line": "Residuum der Ausgleichsebene: max {max:.3e}, rms {rms:.3e}; Abstand zu span(p0, v0): {span:.3e}",
        "drift_line": "(r, s)-Drift von v: {drift:.3e}",
        "spherical_line": "Residuen in Kugelkoordinaten: radial {radial:.3e}, theta {theta:.3e}, phi {phi:.3e}, Geschwindigkeit {speed:.3e} ({skipped} Stützstellen übersprungen)",
        "spherical_unavailable": "Residuen in Kugelkoordinaten nicht verfügbar: {message}",
        "v0_normalised": "v0 auf Länge 1 normiert (|v0| war {norm:.12g})",

        # --- Schließungssuche ---
        "scan_summary": "{count} Gitterpunkte, {closed} geschlossen, {failed} fehlgeschlagen",
        "scan_monotone": "Rotationsverhältnis monoton im Suchbereich: {monotone}",
        "scan_range": "Bereich des Rotationsverhältnisses: {lo:.10g} .. {hi:.10g}",

        # --- Fluss ---
        "flow_summary": "Fluss {status} bei t = {t:.6g} nach {steps} Schritten; Länge {length0:.9g} -> {length1:.9g}",
        "homothety_line": "t = {t:.4g}: reskalierter Hausdorff-Abstand / Durchmesser = {distance:.3e}",
        "rescaled_area_line": "reskalierte Fläche: {first:.9g} -> {last:.9g} (relative Änderung {change:.3e})",
    },
}

LANGUAGES = tuple(TRANSLATIONS)

# Default language
current_language = "en"


def translate(key, **kwargs):
    """
    Returns the translated text for the given key based on the current language.
    Supports placeholder replacement.

    Args:
        key (str): The key for the text to be translated.
        **kwargs: Placeholder values to format the string.

    Returns:
        str: The translated and formatted text.
    """
    text = TRANSLATIONS.get(current_language, {}).get(key) or TRANSLATIONS["en"].get(key, key)
    return text.format(**kwargs)


def set_language(language):
    """Selects the message language ('en' or 'de')."""
    global current_language
    if language not in TRANSLATIONS:
        raise ValueError(f"Unsupported language {language!r}; choose one of {LANGUAGES}")
    current_language = language
