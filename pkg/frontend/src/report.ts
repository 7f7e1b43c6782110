import type { DecodedGrid } from "./types.js";
import { formatValue, gridCells } from "./wire.js";

// lon,lat,value per cell, centers to six decimals, values rendered as
// the shortest decimal that round-trips the payload float32. Text and
// HTML state exactly the same numbers.

export const reportText = (grid: DecodedGrid): string => {
  const lines = ["lon,lat,value"];
  for (const cell of gridCells(grid)) {
    lines.push(`${cell.lon.toFixed(6)},${cell.lat.toFixed(6)},${formatValue(cell.value)}`);
  }
  return lines.join("\n") + "\n";
};

export const reportHtml = (grid: DecodedGrid): string => {
  const rows: string[] = [];
  for (const cell of gridCells(grid)) {
    rows.push(
      `<tr><td>${cell.lon.toFixed(6)}</td><td>${cell.lat.toFixed(6)}</td><td>${formatValue(cell.value)}</td></tr>`,
    );
  }
  return [
    "<table>",
    "<thead><tr><th>lon</th><th>lat</th><th>value</th></tr></thead>",
    "<tbody>",
    ...rows,
    "</tbody>",
    "</table>",
  ].join("\n");
};
