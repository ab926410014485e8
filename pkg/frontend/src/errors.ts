import type { ErrorCode } from "./types.js";

// every documented server error code gets its own user-facing message
export const ERROR_MESSAGES: Record<ErrorCode, string> = {
  unknown_session: "This consultation could not be found. Please start again.",
  not_pending: "That question is no longer the one being asked. The view has been refreshed.",
  invalid_symptom: "One of the selected symptoms is not recognised.",
  session_concluded: "This consultation has already finished.",
};

export const DOCUMENTED_CODES = Object.keys(ERROR_MESSAGES) as ErrorCode[];

export function messageFor(code: string, fallback: string): string {
  if (code in ERROR_MESSAGES) {
    return ERROR_MESSAGES[code as ErrorCode];
  }
  return fallback;
}
