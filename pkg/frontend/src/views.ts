/**
 * DOM rendering for the wizard.
 *
 * Pure render-on-state: every store change rebuilds the view from scratch.
 * All content is inserted via textContent, never via markup strings. The
 * views only read state and call store actions; all conversion logic stays
 * on the server.
 */

import type { JobPayload, MarkPayload } from "./api.js";
import { segmentText } from "./highlight.js";
import { hashForJob } from "./route.js";
import { isEnabled, STEP_ORDER, STEP_TITLES } from "./steps.js";
import type { WizardState, WizardStore } from "./store.js";

const CONCERTO_TYPES = [
  "String",
  "Party",
  "MonetaryAmount",
  "DateTime",
  "TemporalUnit",
  "Integer",
  "Double",
  "Boolean",
];

const MARK_LABELS = ["Party", "String", "Object", "TemporalUnit"];

// Drafts survive re-renders (each render rebuilds the DOM).
let uploadDraft = "";
let contributeDraft = "";

type Child = Node | string;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | boolean> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function downloadFile(name: string, content: string): void {
  const url = URL.createObjectURL(new Blob([content], { type: "text/plain" }));
  const anchor = el("a", { href: url, download: name });
  document.body.append(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}

export function render(root: HTMLElement, state: WizardState, store: WizardStore): void {
  root.replaceChildren(
    renderNav(state, store),
    renderBanners(state),
    renderStep(state, store),
  );
}

function renderNav(state: WizardState, store: WizardStore): HTMLElement {
  const status = state.job?.status ?? null;
  const nav = el("nav", { class: "steps" });
  STEP_ORDER.forEach((step, i) => {
    const button = el(
      "button",
      {
        class: step === state.step ? "step active" : "step",
        disabled: !isEnabled(step, status) || state.busy,
      },
      `${i + 1}. ${STEP_TITLES[step]}`,
    );
    button.addEventListener("click", () => store.goTo(step));
    nav.append(button);
  });
  if (state.job) {
    nav.append(el("span", { class: "job-id" }, `job ${state.job.id}`));
  }
  return nav;
}

function renderBanners(state: WizardState): HTMLElement {
  const box = el("div", { class: "banners" });
  if (state.busy) box.append(el("div", { class: "banner busy" }, "working..."));
  if (state.error) {
    box.append(
      el("div", { class: "banner error" }, `${state.error.code}: ${state.error.message}`),
    );
  }
  if (state.notice) box.append(el("div", { class: "banner notice" }, state.notice));
  return box;
}

function renderStep(state: WizardState, store: WizardStore): HTMLElement {
  switch (state.step) {
    case "upload":
      return renderUpload(store);
    case "template":
      return renderTemplatePicker(state, store);
    case "marks":
      return renderMarkEditor(state, store);
    case "data":
      return renderDataForm(state, store);
    case "review":
      return renderReview(state, store);
  }
}

function renderUpload(store: WizardStore): HTMLElement {
  const textarea = el("textarea", {
    class: "contract-input",
    placeholder: "Paste the contract text here",
    rows: "14",
  });
  textarea.value = uploadDraft;
  textarea.addEventListener("input", () => {
    uploadDraft = textarea.value;
  });
  const submit = el("button", { class: "primary" }, "Create job");
  submit.addEventListener("click", () => {
    void store.upload(textarea.value).then((job) => {
      if (job) {
        uploadDraft = "";
        window.location.hash = hashForJob(job.id);
      }
    });
  });
  return el(
    "section",
    { class: "panel" },
    el("h2", {}, STEP_TITLES.upload),
    textarea,
    el("div", { class: "actions" }, submit),
  );
}

function renderTemplatePicker(state: WizardState, store: WizardStore): HTMLElement {
  const list = el("ol", { class: "suggestions" });
  for (const suggestion of state.suggestions) {
    const pick = el("button", { class: "primary" }, "Use this template");
    pick.addEventListener("click", () => void store.selectTemplate(suggestion.id));
    const meta = Object.entries(suggestion.metadata)
      .map(([key, value]) => `${key}: ${String(value)}`)
      .join(", ");
    list.append(
      el(
        "li",
        { class: "suggestion" },
        el("span", { class: "name" }, suggestion.name),
        el("span", { class: "score" }, `score ${suggestion.score.toFixed(3)}`),
        el("span", { class: "meta" }, meta),
        pick,
      ),
    );
  }
  if (state.suggestions.length === 0) {
    list.append(el("li", {}, "no templates suggested yet"));
  }
  const refresh = el("button", {}, "Refresh suggestions");
  refresh.addEventListener("click", () => {
    void store.loadSuggestions();
  });
  return el(
    "section",
    { class: "panel" },
    el("h2", {}, STEP_TITLES.template),
    el("p", {}, "Templates most similar to the uploaded contract:"),
    list,
    el("div", { class: "actions" }, refresh),
  );
}

function renderDocument(job: JobPayload, store: WizardStore): HTMLElement {
  const panel = el("div", { class: "document" });
  for (const segment of segmentText(job.text, job.marks)) {
    if (!segment.mark) {
      const span = el("span", { "data-start": String(segment.start) });
      span.textContent = segment.text;
      panel.append(span);
      continue;
    }
    const mark = segment.mark;
    const classes = segment.secondary
      ? `mark secondary label-${mark.span.label}`
      : `mark label-${mark.span.label}`;
    const node = el("mark", {
      class: classes,
      "data-start": String(segment.start),
      title: segment.secondary
        ? `repeat of ${mark.variable_name} (stays literal)`
        : `${mark.variable_name}: ${mark.concerto_type}` +
          ` (p=${mark.span.probability.toFixed(2)})`,
    });
    node.textContent = segment.text;
    if (!segment.secondary) {
      // Click-to-toggle: clicking an accepted mark removes it.
      node.addEventListener("click", () =>
        void store.applyEdits([{ op: "remove", variable_name: mark.variable_name }]),
      );
    }
    panel.append(node);
  }
  return panel;
}

/** Character offsets of the current text selection inside the document panel. */
export function selectionOffsets(panel: HTMLElement): { start: number; end: number } | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  const offsetOf = (node: Node, offset: number): number | null => {
    const holder = node instanceof Text ? node.parentElement : (node as HTMLElement);
    if (!holder || !panel.contains(holder)) return null;
    const base = holder.getAttribute("data-start");
    if (base === null) return null;
    return Number(base) + offset;
  };
  const start = offsetOf(range.startContainer, range.startOffset);
  const end = offsetOf(range.endContainer, range.endOffset);
  if (start === null || end === null || end <= start) return null;
  return { start, end };
}

function renderMarkRow(mark: MarkPayload, store: WizardStore): HTMLElement {
  const rename = el("input", { type: "text", class: "rename" });
  rename.value = mark.variable_name;
  const renameButton = el("button", {}, "Rename");
  renameButton.addEventListener("click", () => {
    if (rename.value && rename.value !== mark.variable_name) {
      void store.applyEdits([
        { op: "rename", variable_name: mark.variable_name, new_name: rename.value },
      ]);
    }
  });

  const typeSelect = el("select", { class: "retype" });
  for (const typeName of CONCERTO_TYPES) {
    const option = el("option", { value: typeName }, typeName);
    if (typeName === mark.concerto_type) option.selected = true;
    typeSelect.append(option);
  }
  const rawBox = el("input", { type: "checkbox" });
  rawBox.checked = mark.raw;
  const retypeButton = el("button", {}, "Retype");
  retypeButton.addEventListener("click", () => {
    void store.applyEdits([
      {
        op: "retype",
        variable_name: mark.variable_name,
        concerto_type: typeSelect.value,
        raw: rawBox.checked,
      },
    ]);
  });

  const removeButton = el("button", { class: "danger" }, "Remove");
  removeButton.addEventListener("click", () => {
    void store.applyEdits([{ op: "remove", variable_name: mark.variable_name }]);
  });

  return el(
    "tr",
    {},
    el("td", {}, el("span", { class: `chip label-${mark.span.label}` }, mark.span.label)),
    el("td", {}, rename, renameButton),
    el("td", {}, typeSelect, el("label", { class: "raw" }, rawBox, " raw"), retypeButton),
    el("td", {}, `${mark.span.start}..${mark.span.end}`),
    el("td", {}, mark.span.probability.toFixed(2)),
    el("td", {}, removeButton),
  );
}

function renderMarkEditor(state: WizardState, store: WizardStore): HTMLElement {
  const job = state.job;
  if (!job) return el("section", { class: "panel" }, "no job loaded");

  const slider = el("input", {
    type: "range",
    min: "0",
    max: "1",
    step: "0.05",
  });
  slider.value = String(job.mark_threshold ?? 0.5);
  const sliderLabel = el("span", { class: "threshold" }, slider.value);
  slider.addEventListener("input", () => {
    sliderLabel.textContent = slider.value;
  });
  const autoButton = el("button", { class: "primary" }, "Auto-mark");
  autoButton.addEventListener("click", () => {
    void store.autoMark(Number(slider.value));
  });

  const versions = Object.entries(job.tagger_versions)
    .map(([label, version]) => `${label}@${version}`)
    .join(", ");

  const documentPanel = renderDocument(job, store);

  const nameInput = el("input", { type: "text", placeholder: "variable name" });
  const labelSelect = el("select", {});
  for (const label of MARK_LABELS) {
    labelSelect.append(el("option", { value: label }, label));
  }
  const addButton = el("button", {}, "Mark selection");
  addButton.addEventListener("click", () => {
    const offsets = selectionOffsets(documentPanel);
    if (!offsets || !nameInput.value) return;
    void store.applyEdits([
      {
        op: "add",
        variable_name: nameInput.value,
        start: offsets.start,
        end: offsets.end,
        label: labelSelect.value,
      },
    ]);
  });

  const table = el(
    "table",
    { class: "marks" },
    el(
      "tr",
      {},
      el("th", {}, "label"),
      el("th", {}, "variable"),
      el("th", {}, "type"),
      el("th", {}, "span"),
      el("th", {}, "p"),
      el("th", {}, ""),
    ),
  );
  for (const mark of job.marks) {
    table.append(renderMarkRow(mark, store));
  }

  const next = el("button", { class: "primary" }, "Extract data");
  next.addEventListener("click", () => {
    void store.extract();
  });

  return el(
    "section",
    { class: "panel" },
    el("h2", {}, STEP_TITLES.marks),
    el(
      "div",
      { class: "toolbar" },
      el("label", {}, "threshold ", slider, " ", sliderLabel),
      autoButton,
      el("span", { class: "versions" }, versions ? `tagger: ${versions}` : "tagger: not run"),
    ),
    documentPanel,
    el("div", { class: "toolbar" }, nameInput, labelSelect, addButton),
    table,
    el("div", { class: "actions" }, next),
  );
}

function confidenceBadge(field: string, job: JobPayload): HTMLElement {
  const confidence = job.confidences[field];
  if (job.missing_fields.includes(field)) {
    return el("span", { class: "badge missing" }, "missing");
  }
  if (confidence === undefined) {
    return el("span", { class: "badge" }, "-");
  }
  const bucket = confidence >= 0.8 ? "high" : confidence >= 0.5 ? "mid" : "low";
  return el("span", { class: `badge ${bucket}` }, `${Math.round(confidence * 100)}%`);
}

function renderDataForm(state: WizardState, store: WizardStore): HTMLElement {
  const job = state.job;
  if (!job) return el("section", { class: "panel" }, "no job loaded");

  const instance = job.instance ?? {};
  const fields = Object.keys(instance)
    .filter((key) => key !== "$class")
    .concat(job.missing_fields)
    .sort();

  const table = el(
    "table",
    { class: "fields" },
    el(
      "tr",
      {},
      el("th", {}, "field"),
      el("th", {}, "value"),
      el("th", {}, "confidence"),
      el("th", {}, ""),
    ),
  );
  for (const field of fields) {
    const input = el("input", { type: "text" });
    const value = instance[field];
    input.value = value === undefined || value === null ? "" : String(value);
    const save = el("button", {}, "Save");
    save.addEventListener("click", () => {
      void store.setValue(field, input.value);
    });
    table.append(
      el(
        "tr",
        {},
        el("td", {}, field),
        el("td", {}, input),
        el("td", {}, confidenceBadge(field, job)),
        el("td", {}, save),
      ),
    );
  }

  const reExtract = el("button", {}, "Re-extract");
  reExtract.addEventListener("click", () => {
    void store.extract();
  });
  const force = el("input", { type: "checkbox" });
  const emit = el("button", { class: "primary" }, "Emit artifacts");
  emit.addEventListener("click", () => {
    void store.emit(force.checked);
  });

  return el(
    "section",
    { class: "panel" },
    el("h2", {}, STEP_TITLES.data),
    el("p", {}, `data model: ${job.data_class ?? "unknown"}`),
    table,
    el(
      "div",
      { class: "actions" },
      reExtract,
      emit,
      el("label", { class: "force" }, force, " emit even if validation fails"),
    ),
  );
}

function renderReview(state: WizardState, store: WizardStore): HTMLElement {
  const job = state.job;
  const output = job?.output;
  if (!job || !output) return el("section", { class: "panel" }, "nothing emitted yet");

  const downloadTemplate = el("button", {}, "Download template.cicero");
  downloadTemplate.addEventListener("click", () =>
    downloadFile("template.cicero", output.cicero_text),
  );
  const downloadInstance = el("button", {}, "Download instance.json");
  downloadInstance.addEventListener("click", () =>
    downloadFile("instance.json", output.instance_json),
  );

  const contributeName = el("input", { type: "text", placeholder: "new template name" });
  contributeName.value = contributeDraft;
  contributeName.addEventListener("input", () => {
    contributeDraft = contributeName.value;
  });
  const contributeButton = el("button", {}, "Contribute to library");
  contributeButton.addEventListener("click", () => {
    if (contributeName.value) void store.contribute(contributeName.value);
  });

  const provenance = output.provenance;
  const provenanceLines = [
    `template: ${provenance.template_id}`,
    `tagger: ${Object.entries(provenance.tagger_versions)
      .map(([label, version]) => `${label}@${version}`)
      .join(", ")}`,
    `extractor: ${provenance.extractor_id ?? "manual"}`,
    `threshold: ${provenance.threshold ?? "-"}`,
    `emitted: ${provenance.emitted_at}`,
  ];

  return el(
    "section",
    { class: "panel" },
    el("h2", {}, STEP_TITLES.review),
    el("h3", {}, "Cicero template"),
    el("pre", { class: "artifact" }, output.cicero_text),
    el("h3", {}, "Concerto instance"),
    el("pre", { class: "artifact" }, output.instance_json),
    el("div", { class: "provenance" }, provenanceLines.join("\n")),
    el("div", { class: "actions" }, downloadTemplate, downloadInstance),
    el("div", { class: "actions" }, contributeName, contributeButton),
  );
}
