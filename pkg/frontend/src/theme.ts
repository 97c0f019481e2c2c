/**
 * Theme tokens. Colors and timings are deliberately centralized: the entity
 * underline is blue, anchors that already have an expansion turn purple, and
 * freshly inserted expansion text starts blue and settles into light gray
 * over about three seconds.
 */
export const theme = {
  entityUnderline: "#1a6fd4",
  expandedUnderline: "#7a3fd1",
  freshText: "#1a6fd4",
  settledText: "#6b6f76",
  fadeMs: 3000,
  toastMs: 4000,
} as const;

export type Theme = typeof theme;
