// Mathematics rendering is delegated entirely to a browser-side renderer
// loaded by the page (KaTeX auto-render, when present). The engine ships raw
// LaTeX; without a renderer the raw source stays visible, which still reads.

type AutoRender = (el: HTMLElement, options?: object) => void;

declare global {
  interface Window {
    renderMathInElement?: AutoRender;
  }
}

export const MATH_DELIMITERS = [
  { left: "$$", right: "$$", display: true },
  { left: "\\[", right: "\\]", display: true },
  { left: "$", right: "$", display: false },
  { left: "\\(", right: "\\)", display: false },
];

export function renderMathIn(el: HTMLElement): boolean {
  const render = typeof window !== "undefined" ? window.renderMathInElement : undefined;
  if (!render) return false;
  render(el, { delimiters: MATH_DELIMITERS, throwOnError: false });
  return true;
}
