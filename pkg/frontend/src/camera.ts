// Camera capture and frame preparation: downsample to <= 640x360 and
// grayscale with the same BT.601 rounding the engine uses.

export const MAX_SEND_W = 640;
export const MAX_SEND_H = 360;

export async function openCamera(video: HTMLVideoElement): Promise<MediaStream> {
  const stream = await navigator.mediaDevices.getUserMedia({
    video: { facingMode: "environment" },
    audio: false,
  });
  video.srcObject = stream;
  await video.play();
  return stream;
}

export function sendSize(videoW: number, videoH: number): [number, number] {
  const s = Math.min(1, MAX_SEND_W / videoW, MAX_SEND_H / videoH);
  return [Math.max(1, Math.round(videoW * s)), Math.max(1, Math.round(videoH * s))];
}

/** RGBA bytes -> engine-identical luma bytes. */
export function rgbaToGray(rgba: Uint8ClampedArray, n: number): Uint8Array {
  const gray = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    const o = i * 4;
    gray[i] = Math.floor(
      0.299 * rgba[o] + 0.587 * rgba[o + 1] + 0.114 * rgba[o + 2] + 0.5,
    );
  }
  return gray;
}

export function bytesToBase64(bytes: Uint8Array): string {
  let bin = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    bin += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(bin);
}

export class FrameGrabber {
  private canvas = document.createElement("canvas");
  private ctx = this.canvas.getContext("2d", { willReadFrequently: true })!;

  grab(video: HTMLVideoElement): { width: number; height: number; pixels: string } | null {
    if (!video.videoWidth) return null;
    const [w, h] = sendSize(video.videoWidth, video.videoHeight);
    this.canvas.width = w;
    this.canvas.height = h;
    this.ctx.drawImage(video, 0, 0, w, h);
    const rgba = this.ctx.getImageData(0, 0, w, h).data;
    return { width: w, height: h, pixels: bytesToBase64(rgbaToGray(rgba, w * h)) };
  }
}
