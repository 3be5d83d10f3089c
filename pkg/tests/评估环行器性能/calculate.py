import os

import numpy as np

# 假设chirow包在Python路径中
from chirow.io.paths import set_user_data_dir

# 获取当前脚本所在目录的绝对路径
current_dir = os.path.dirname(os.path.abspath(__file__))
# 设置用户数据目录为当前脚本目录下的 .chirow_data 子目录(必须在导入其他模块之前设置)
set_user_data_dir(os.path.join(current_dir, ".chirow_data"))

from chirow.device.circulator import circulator_report, tunneling_report
from chirow.io.config import load_config
from chirow.io.export import write_csv
from chirow.io.preset_manager import PresetManager
from chirow.model.params import derive_tight_binding, derived_losses
from chirow.transport.scattering import transmission_spectrum


def main():
    # --- 1. 读取器件预设 ---
    manager = PresetManager()
    config = load_config(manager.load_config("device_lossy"))
    params = config.physical_params()
    tb = derive_tight_binding(params)
    losses = derived_losses(params)
    omega0_hz = config.params["omega0_hz"]

    print("器件参数 (device_lossy):")
    print(f"  𝓕/2π = {params.fsr * omega0_hz / 1e12:.4f} THz")
    print(f"  g/Ω = {tb.g:.4e}, J1/Ω = {tb.J1:.4e}, J2/Ω = {tb.J2:.4e}")
    print(f"  γ_ex/2π = {losses.gamma_ex * omega0_hz / 1e9:.3f} GHz, α = {losses.alpha:.6f}")

    # --- 2. 计算透射谱 ---
    print("正在计算四端口透射谱...")
    grid = params.omega0 + config.grid_values(8e-4, 16001)
    spectrum = transmission_spectrum(params, grid)
    save_path = os.path.join(current_dir, "device_lossy_transmission.csv")
    write_csv(spectrum.to_frame(), save_path)
    print(f"透射谱已保存到：{save_path}")

    # --- 3. 环行器指标 ---
    print("正在评估环行器性能...")
    report = circulator_report(params, grid, config.threshold)
    report.print_summary(params.omega0)

    # --- 4. 报告各信道 ---
    print("\n保真度高于阈值的信道:")
    print("-" * 60)
    for channel in sorted(report.channels, key=lambda c: c.center):
        print(f"中心 (ω−Ω)/Ω: {channel.center:+.4e}   宽度: {channel.width:.4e}")
        print(f"  保真度 F: {channel.fidelity:.4f}   存活概率 P: {channel.survival:.4f}")
        print(f"  插入损耗: {channel.insertion_loss_db:.3f} dB (信道平均 {channel.mean_insertion_loss_db:.3f} dB)")
        print()

    # --- 5. 短链隧穿对照 ---
    tunneling = load_config(manager.load_config("tunneling_n3")).physical_params()
    result = tunneling_report(tunneling)
    print("N=3 边缘态隧穿 (ω=Ω):")
    print(f"  T23 = {result.t23:.4f}, T14 = {result.t14:.4f}, F = {result.fidelity:.4f}")
    print(f"  最大 T23 出现在 (ω−Ω)/Ω = {spectrum.detuning[np.argmax(spectrum.t(2, 3))]:+.4e}")


if __name__ == "__main__":
    main()
