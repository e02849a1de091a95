import { describe, expect, it } from "vitest";

import { renderRunView, renderScriptCompare, renderSteeringPanel, renderTranscript } from "../src/render.js";
import type { Report, Snapshot } from "../src/types.js";
import { buildViewModel } from "../src/viewmodel.js";

function snapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    run_id: "r1",
    phase: "simulating",
    error: null,
    requirement: { research_goal: "g", core_variables: ["v"], target_object: "t" },
    ...overrides,
  };
}

function report(totals: number[]): Report {
  return {
    scorecards: totals.map((total, i) => ({
      script_id: `script-0${i}`,
      candidate_index: i,
      perspective: "variable design",
      rows: [
        { criterion: "scientific_soundness", weight: 0.15, score: 80, rationale: "solid design" },
        { criterion: "ethics_compliance", weight: 0.5, score: 100, rationale: "clean" },
      ],
      total,
      eliminated: i === 1,
      elimination_reason: i === 1 ? "total 20 falls below 50" : null,
    })),
    selected_script_id: "script-00",
  };
}

describe("steering panel", () => {
  it("disables all controls outside the simulating phase", () => {
    for (const phase of ["composing", "finalizing", "casting", "sealed", "failed"] as const) {
      const html = renderSteeringPanel(buildViewModel(snapshot({ phase }), null));
      expect(html).toContain('data-enabled="false"');
      expect((html.match(/<fieldset disabled>/g) ?? []).length).toBe(2);
      expect(html).toContain("steering requires the simulating phase");
    }
  });

  it("enables controls while simulating", () => {
    const html = renderSteeringPanel(buildViewModel(snapshot({ phase: "simulating", day: 4 }), null));
    expect(html).toContain('data-enabled="true"');
    expect(html).not.toContain("<fieldset disabled>");
    expect(html).toContain("commands land at the next tick");
  });
});

describe("script comparison", () => {
  it("renders one six-ish-row card per candidate with totals verbatim", () => {
    const vm = buildViewModel(snapshot(), report([83.5, 20]));
    const html = renderScriptCompare(vm);
    expect(html).toContain('data-total="script-00">83.5<');
    expect(html).toContain('data-total="script-01">20<');
    expect(html).toContain("selected");
  });

  it("marks eliminated candidates with the reason text", () => {
    const html = renderScriptCompare(buildViewModel(snapshot(), report([83.5, 20])));
    expect(html).toContain("is-eliminated");
    expect(html).toContain("total 20 falls below 50");
  });

  it("totals are rendered by string conversion, never recomputed", () => {
    // a deliberately "wrong" total must be displayed as sent
    const wrong = report([77.77]);
    wrong.scorecards[0].rows[0].score = 0;
    const html = renderScriptCompare(buildViewModel(snapshot(), wrong));
    expect(html).toContain(">77.77<");
  });
});

describe("transcript", () => {
  it("escapes message text and tags message kinds", () => {
    const vm = buildViewModel(
      snapshot({
        channel: [
          { day_index: 0, seq: 0, sender: "system", text: "<b>not markup</b>", kind: "emergent_event" },
        ],
      }),
      null,
    );
    const html = renderTranscript(vm);
    expect(html).toContain("kind-emergent_event");
    expect(html).toContain("&lt;b&gt;not markup&lt;/b&gt;");
    expect(html).not.toContain("<b>not markup</b>");
  });
});

describe("full run view", () => {
  it("renders header, scorecards, steering, charts and transcript together", () => {
    const vm = buildViewModel(
      snapshot({
        tension_series: [40, 55, 62],
        channel: [{ day_index: 0, seq: 0, sender: "alpha", text: "acts", kind: "action" }],
        outcome: { label: "quiet ending", category: "peace" },
        phase: "sealed",
      }),
      report([83.5]),
    );
    const html = renderRunView(vm);
    expect(html).toContain("run r1");
    expect(html).toContain("peace");
    expect(html).toContain("tension index");
    expect(html).toContain("kind-action");
    expect(html).toContain('data-enabled="false"');
  });
});
