/** HTML renderers: pure functions from view model to markup strings.
 *
 * Displayed numbers come straight from the service payloads via
 * String(...); there is no client-side arithmetic on scores or series. */

import { castGraphSvg, escapeXml, probabilityStackSvg, tensionLineSvg } from "./charts.js";
import type { Scorecard } from "./types.js";
import type { ViewModel } from "./viewmodel.js";

export const escapeHtml = escapeXml;

export function renderRequirementForm(): string {
  return `
<form id="requirement-form">
  <label>Research goal <input name="research_goal" required placeholder="what should the experiment determine?"/></label>
  <label>Core variables (comma separated) <input name="core_variables" required placeholder="lever one, lever two"/></label>
  <label>Target object <input name="target_object" required placeholder="who or what is simulated"/></label>
  <label>Narrative <textarea name="narrative" rows="3"></textarea></label>
  <label>Days <input name="days" type="number" value="13" min="1"/></label>
  <label>Start date <input name="start_date" type="date" value="1962-10-16"/></label>
  <label>Fixture path (replay mode) <input name="fixture" placeholder="optional fixture.jsonl"/></label>
  <button type="submit">Create run</button>
</form>`;
}

function scorecardTable(card: Scorecard, selectedId: string | null): string {
  const rows = card.rows
    .map(
      (row) => `
    <tr>
      <td>${escapeHtml(row.criterion)}</td>
      <td class="num">${row.weight === null ? "—" : String(row.weight)}</td>
      <td class="num">${String(row.score)}</td>
      <td class="rationale">${escapeHtml(row.rationale)}</td>
    </tr>`,
    )
    .join("");
  const badges = [
    card.script_id === selectedId ? '<span class="badge selected">selected</span>' : "",
    card.eliminated
      ? `<span class="badge eliminated" title="${escapeHtml(card.elimination_reason ?? "")}">eliminated: ${escapeHtml(card.elimination_reason ?? "")}</span>`
      : "",
  ].join(" ");
  return `
<article class="scorecard${card.eliminated ? " is-eliminated" : ""}" data-script="${escapeHtml(card.script_id)}">
  <h3>${escapeHtml(card.script_id)} <small>${escapeHtml(card.perspective ?? "")}</small> ${badges}</h3>
  <table>
    <thead><tr><th>criterion</th><th>weight</th><th>score</th><th>rationale</th></tr></thead>
    <tbody>${rows}</tbody>
    <tfoot><tr><th>total</th><th></th><th class="num total" data-total="${escapeHtml(card.script_id)}">${String(card.total)}</th><th></th></tr></tfoot>
  </table>
</article>`;
}

export function renderScriptCompare(vm: ViewModel): string {
  if (!vm.scorecards.length) return '<p class="placeholder">Candidates are still being composed…</p>';
  return `<section class="compare">${vm.scorecards.map((c) => scorecardTable(c, vm.selectedScriptId)).join("")}</section>`;
}

export function renderSteeringPanel(vm: ViewModel): string {
  const disabled = vm.steeringEnabled ? "" : " disabled";
  const note = vm.steeringEnabled
    ? `day ${vm.day}${vm.daysTotal !== null ? ` of ${vm.daysTotal}` : ""}; commands land at the next tick`
    : `steering requires the simulating phase (current: ${escapeHtml(vm.phase)})`;
  return `
<section class="steering" data-enabled="${vm.steeringEnabled}">
  <p class="steering-note">${note}</p>
  <form id="event-form">
    <fieldset${disabled}>
      <legend>Inject emergent event</legend>
      <label>Day <input name="day_index" type="number" min="${vm.day}" value="${vm.day}"/></label>
      <label>Description <input name="description" required/></label>
      <button type="submit"${disabled}>Queue event</button>
    </fieldset>
  </form>
  <form id="override-form">
    <fieldset${disabled}>
      <legend>Override a decision</legend>
      <label>Day <input name="day_index" type="number" min="${vm.day}" value="${vm.day}"/></label>
      <label>Agent <input name="agent_id" required/></label>
      <label>Replacement decision <input name="replacement" required/></label>
      <button type="submit"${disabled}>Queue override</button>
    </fieldset>
  </form>
  <p class="pending">queued: ${vm.pendingEvents} events, ${vm.pendingOverrides} overrides</p>
</section>`;
}

export function renderSeriesCharts(vm: ViewModel): string {
  const probability = vm.probability
    ? `<h3>${escapeHtml(vm.probability.name)}</h3>${probabilityStackSvg(vm.probability)}`
    : '<p class="placeholder">No probability series yet.</p>';
  const tension = vm.tension.length
    ? `<h3>tension index</h3>${tensionLineSvg(vm.tension)}`
    : "";
  return `<section class="charts">${probability}${tension}</section>`;
}

export function renderTranscript(vm: ViewModel): string {
  if (!vm.transcript.length) return '<p class="placeholder">The world channel is empty.</p>';
  const rows = vm.transcript
    .map(
      (m) => `
  <li class="msg kind-${m.kind}">
    <span class="day">day ${m.day_index}</span>
    <span class="sender">${escapeHtml(m.sender)}</span>
    <span class="text">${escapeHtml(m.text)}</span>
  </li>`,
    )
    .join("");
  return `<ol class="transcript">${rows}</ol>`;
}

export function renderCast(vm: ViewModel): string {
  if (!vm.cast) return "";
  return `<section class="cast">${castGraphSvg(vm.cast)}</section>`;
}

export function renderHeader(vm: ViewModel): string {
  const outcome = vm.outcome
    ? ` — outcome: <strong>${escapeHtml(vm.outcome.category)}</strong> (${escapeHtml(vm.outcome.label)})`
    : "";
  const error = vm.error ? ` — <span class="error">${escapeHtml(vm.error)}</span>` : "";
  return `<header><h2>run ${escapeHtml(vm.runId)}</h2><p>phase: <strong class="phase-${vm.phase}">${vm.phase}</strong>${outcome}${error}</p></header>`;
}

export function renderRunView(vm: ViewModel): string {
  return [
    renderHeader(vm),
    renderScriptCompare(vm),
    renderSteeringPanel(vm),
    renderSeriesCharts(vm),
    renderCast(vm),
    renderTranscript(vm),
  ].join("\n");
}
