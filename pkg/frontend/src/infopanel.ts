// The three information tabs and the fields each one shows.

import type { HerbEntry } from "./protocol.js";
import type { Tab } from "./viewstate.js";

export interface PanelField {
  label: string;
  value: string;
}

export const TAB_LABELS: Record<Tab, string> = {
  species: "Herb species",
  morphology: "Morphological characteristics",
  ecology: "Ecological habits",
};

export function panelFields(entry: HerbEntry, tab: Tab): PanelField[] {
  switch (tab) {
    case "species":
      return [
        { label: "Chinese name", value: entry.name_cn },
        { label: "English name", value: entry.name_en },
        { label: "Source area", value: entry.source_area },
        { label: "Usage", value: entry.usage },
      ];
    case "morphology":
      return [
        { label: "Roots", value: entry.morphology.roots },
        { label: "Stems", value: entry.morphology.stems },
        { label: "Leaves", value: entry.morphology.leaves },
        { label: "Seeds", value: entry.morphology.seeds },
      ];
    case "ecology":
      return [
        { label: "Environment", value: entry.ecology.environment },
        { label: "Life cycle", value: entry.ecology.life_cycle },
      ];
  }
}
