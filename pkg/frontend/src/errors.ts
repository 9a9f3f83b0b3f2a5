/** Error with a stable machine-readable code alongside the human message. */
export class OttvError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(message);
    this.name = "OttvError";
    this.code = code;
  }
}

/** Map an engine CLI exit code to a stable error-code string. */
export function codeForExit(exitCode: number): string {
  switch (exitCode) {
    case 1:
      return "invalid_config";
    case 2:
      return "io_error";
    case 3:
      return "numerical_error";
    default:
      return "engine_error";
  }
}
