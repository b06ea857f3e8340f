// Small fingers need big buttons. Every actionable element in every screen
// goes through mkControl, and component tests walk the rendered output to
// hold the floor.

export const MIN_TARGET_PX = 48;
export const DEFAULT_TARGET_PX = 56;

export interface Control {
  action: string;
  label: string;
  targetPx: number;
  disabled: boolean;
  payload: string | null;
}

export function mkControl(
  action: string,
  label: string,
  opts: { targetPx?: number; disabled?: boolean; payload?: string } = {},
): Control {
  return {
    action,
    label,
    targetPx: Math.max(MIN_TARGET_PX, opts.targetPx ?? DEFAULT_TARGET_PX),
    disabled: opts.disabled ?? false,
    payload: opts.payload ?? null,
  };
}
