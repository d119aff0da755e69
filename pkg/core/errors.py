#!/usr/bin/env python3
"""
异常定义

功能：
- 工具箱统一异常基类
- 配置 / 数据 / 状态 / 发散 四类错误
- CLI退出码映射
"""

from typing import Optional


class ToolkitError(Exception):
    """工具箱异常基类"""

    exit_code = 1


class ConfigurationError(ToolkitError, ValueError):
    """配置错误（形状不匹配、参数非法等）"""

    exit_code = 1


class DataError(ToolkitError, ValueError):
    """数据错误（空文件、类别越界等）"""

    exit_code = 2


class ParseError(DataError):
    """文件解析错误，附带行号"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"第{line_number}行: {message}"
        super().__init__(message)


class DomainError(ToolkitError, ValueError):
    """数学定义域错误（如原点处的方位角）"""

    exit_code = 2


class StateError(ToolkitError, RuntimeError):
    """调用顺序错误（如未前向就反向）"""

    exit_code = 1


class DivergenceError(ToolkitError, RuntimeError):
    """训练发散（损失出现NaN/Inf）"""

    exit_code = 3

    def __init__(self, iteration: int, loss: float):
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"训练在第{iteration}次迭代发散: loss={loss}")
